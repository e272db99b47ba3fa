//! Symbolic algebra for spider labels.
//!
//! Z and X spiders are labelled by functions ℝ → ℂ ([`RealFun`]), Fock spiders
//! by functions ℕ → ℂ ([`NatFun`]). Both are kept in a closed atom algebra so
//! that rewrite rules can decide label equality syntactically: sums of atom
//! terms, each term a complex weight times a product of atoms in normal form.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use std::fmt;
use thiserror::Error;

/// Tolerance used when comparing label coefficients syntactically.
pub const LABEL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabelError {
    #[error("product of point masses at the same point is not in the algebra")]
    IllFormedProduct,
    #[error("cannot evaluate a distributional atom ({0}) pointwise")]
    DistributionalEval(String),
    #[error("domain mismatch: cannot combine a real-line label with a Fock label")]
    DomainMismatch,
    #[error("fourier transform not closed for this atom: {0}")]
    NotClosedUnderFourier(String),
    #[error("label has no finite symbolic integral: {0}")]
    NoClosedIntegral(String),
    #[error("parse error in label `{0}`: {1}")]
    Parse(String, String),
}

fn cx(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn c_close(a: C64, b: C64) -> bool {
    (a - b).norm() <= LABEL_TOL * (1.0 + a.norm().max(b.norm()))
}

// ---------------------------------------------------------------------------
// RealFun
// ---------------------------------------------------------------------------

/// One multiplicative atom over ℝ.
///
/// `Gauss { a, b, a3 }` is x ↦ exp(a3·x³·i-free… see below) — precisely
/// exp(i·a3·x³ + a·x² + b·x); the constant part of the exponent is folded into
/// the term weight. `a3` extends the quadratic fragment just far enough to
/// express the cubic phase gate; it is excluded from the Fourier-closed
/// fragment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RealAtom {
    /// x ↦ exp(i·a3·x³ + a·x² + b·x); weight carries exp(c).
    Gauss { a: C64, b: C64, a3: f64 },
    /// δ(x − x0), scaled by the term weight.
    PointMass { x0: f64 },
    /// Σ_k envelope(x)·δ(x − offset − k·spacing), with optional Gaussian
    /// envelope exp(a·x² + b·x) and a character modulation exp(i·2π·mu·x).
    Comb {
        spacing: f64,
        offset: f64,
        modulation: f64,
        envelope: Option<(C64, C64)>,
    },
}

/// One term of a [`RealFun`]: weight · atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealTerm {
    pub weight: C64,
    pub atom: RealAtom,
}

/// A function ℝ → ℂ in closed symbolic form: a finite sum of atom terms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RealFun {
    pub terms: Vec<RealTerm>,
}

impl RealFun {
    pub fn zero() -> Self {
        RealFun { terms: vec![] }
    }

    /// The constant function `w`.
    pub fn constant(w: C64) -> Self {
        RealFun {
            terms: vec![RealTerm {
                weight: w,
                atom: RealAtom::Gauss {
                    a: cx(0.0, 0.0),
                    b: cx(0.0, 0.0),
                    a3: 0.0,
                },
            }],
        }
    }

    pub fn one() -> Self {
        Self::constant(cx(1.0, 0.0))
    }

    /// x ↦ exp(a·x² + b·x + c).
    pub fn gauss(a: C64, b: C64, c: C64) -> Self {
        RealFun {
            terms: vec![RealTerm {
                weight: c.exp(),
                atom: RealAtom::Gauss { a, b, a3: 0.0 },
            }],
        }
    }

    /// x ↦ exp(i·(t1·x + t2·x² + t3·x³)), a pure polynomial phase.
    pub fn poly_phase(t1: f64, t2: f64, t3: f64) -> Self {
        RealFun {
            terms: vec![RealTerm {
                weight: cx(1.0, 0.0),
                atom: RealAtom::Gauss {
                    a: cx(0.0, t2),
                    b: cx(0.0, t1),
                    a3: t3,
                },
            }],
        }
    }

    /// χ_{x0}: p ↦ exp(−i·2π·p·x0), the label of a position ket drawn in
    /// momentum space.
    pub fn chi(x0: f64) -> Self {
        Self::gauss(cx(0.0, 0.0), cx(0.0, -2.0 * PI * x0), cx(0.0, 0.0))
    }

    /// χ̄_{p0}: x ↦ exp(i·2π·p0·x).
    pub fn chi_bar(p0: f64) -> Self {
        Self::gauss(cx(0.0, 0.0), cx(0.0, 2.0 * PI * p0), cx(0.0, 0.0))
    }

    /// w·δ(x − x0).
    pub fn point_mass(x0: f64, w: C64) -> Self {
        RealFun {
            terms: vec![RealTerm {
                weight: w,
                atom: RealAtom::PointMass { x0 },
            }],
        }
    }

    /// Infinite Dirac comb with the given spacing and offset.
    pub fn comb(spacing: f64, offset: f64) -> Self {
        assert!(spacing > 0.0, "comb spacing must be positive");
        RealFun {
            terms: vec![RealTerm {
                weight: cx(1.0, 0.0),
                atom: RealAtom::Comb {
                    spacing,
                    offset,
                    modulation: 0.0,
                    envelope: None,
                },
            }],
        }
    }

    /// Dirac comb with a Gaussian envelope exp(a·x² + b·x) on the delta weights.
    pub fn comb_enveloped(spacing: f64, offset: f64, a: C64, b: C64) -> Self {
        assert!(spacing > 0.0, "comb spacing must be positive");
        RealFun {
            terms: vec![RealTerm {
                weight: cx(1.0, 0.0),
                atom: RealAtom::Comb {
                    spacing,
                    offset,
                    modulation: 0.0,
                    envelope: Some((a, b)),
                },
            }],
        }
    }

    pub fn add(&self, other: &RealFun) -> RealFun {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        RealFun { terms }.normalized()
    }

    pub fn scale(&self, w: C64) -> RealFun {
        RealFun {
            terms: self
                .terms
                .iter()
                .map(|t| RealTerm {
                    weight: t.weight * w,
                    atom: t.atom,
                })
                .collect(),
        }
        .normalized()
    }

    /// Pointwise product, distributing over sums.
    pub fn mul(&self, other: &RealFun) -> Result<RealFun, LabelError> {
        let mut terms = Vec::new();
        for s in &self.terms {
            for t in &other.terms {
                if let Some(term) = mul_real_terms(s, t)? {
                    terms.push(term);
                }
            }
        }
        Ok(RealFun { terms }.normalized())
    }

    /// Complex-conjugate label: x ↦ conj(f(x)).
    pub fn conj(&self) -> RealFun {
        RealFun {
            terms: self
                .terms
                .iter()
                .map(|t| RealTerm {
                    weight: t.weight.conj(),
                    atom: match t.atom {
                        RealAtom::Gauss { a, b, a3 } => RealAtom::Gauss {
                            a: a.conj(),
                            b: b.conj(),
                            a3: -a3,
                        },
                        RealAtom::PointMass { x0 } => RealAtom::PointMass { x0 },
                        RealAtom::Comb {
                            spacing,
                            offset,
                            modulation,
                            envelope,
                        } => RealAtom::Comb {
                            spacing,
                            offset,
                            modulation: -modulation,
                            envelope: envelope.map(|(a, b)| (a.conj(), b.conj())),
                        },
                    },
                })
                .collect(),
        }
        .normalized()
    }

    /// x ↦ f(−x).
    pub fn reflect(&self) -> RealFun {
        RealFun {
            terms: self
                .terms
                .iter()
                .map(|t| RealTerm {
                    weight: t.weight,
                    atom: match t.atom {
                        RealAtom::Gauss { a, b, a3 } => RealAtom::Gauss { a, b: -b, a3: -a3 },
                        RealAtom::PointMass { x0 } => RealAtom::PointMass { x0: -x0 },
                        RealAtom::Comb {
                            spacing,
                            offset,
                            modulation,
                            envelope,
                        } => RealAtom::Comb {
                            spacing,
                            offset: -offset,
                            modulation: -modulation,
                            envelope: envelope.map(|(a, b)| (a, -b)),
                        },
                    },
                })
                .collect(),
        }
        .normalized()
    }

    /// x ↦ f(m·x) for m ≠ 0.
    pub fn dilate(&self, m: f64) -> Result<RealFun, LabelError> {
        assert!(m != 0.0);
        let mut terms = Vec::new();
        for t in &self.terms {
            terms.push(RealTerm {
                weight: t.weight,
                atom: match t.atom {
                    RealAtom::Gauss { a, b, a3 } => RealAtom::Gauss {
                        a: a * (m * m),
                        b: b * m,
                        a3: a3 * m * m * m,
                    },
                    // δ(m·x − x0) = |m|⁻¹ δ(x − x0/m)
                    RealAtom::PointMass { x0 } => {
                        terms.push(RealTerm {
                            weight: t.weight / m.abs(),
                            atom: RealAtom::PointMass { x0: x0 / m },
                        });
                        continue;
                    }
                    RealAtom::Comb {
                        spacing,
                        offset,
                        modulation,
                        envelope,
                    } => {
                        terms.push(RealTerm {
                            weight: t.weight / m.abs(),
                            atom: RealAtom::Comb {
                                spacing: spacing / m.abs(),
                                offset: offset / m,
                                modulation: modulation * m,
                                envelope: envelope.map(|(a, b)| (a * (m * m), b * m)),
                            },
                        });
                        continue;
                    }
                },
            });
        }
        Ok(RealFun { terms }.normalized())
    }

    /// Pointwise evaluation. Errors on distributional atoms.
    pub fn eval(&self, x: f64) -> Result<C64, LabelError> {
        let mut acc = cx(0.0, 0.0);
        for t in &self.terms {
            match t.atom {
                RealAtom::Gauss { a, b, a3 } => {
                    let e = a * (x * x) + b * x + cx(0.0, a3 * x * x * x);
                    acc += t.weight * e.exp();
                }
                RealAtom::PointMass { .. } => {
                    return Err(LabelError::DistributionalEval("delta".into()))
                }
                RealAtom::Comb { .. } => {
                    return Err(LabelError::DistributionalEval("comb".into()))
                }
            }
        }
        Ok(acc)
    }

    /// True if every term is pointwise-evaluable (no distributional atoms).
    pub fn is_pointwise(&self) -> bool {
        self.terms
            .iter()
            .all(|t| matches!(t.atom, RealAtom::Gauss { .. }))
    }

    /// True if this is syntactically the constant function 1.
    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && c_close(self.terms[0].weight, cx(1.0, 0.0))
            && matches!(self.terms[0].atom, RealAtom::Gauss { a, b, a3 }
                        if a.norm() <= LABEL_TOL && b.norm() <= LABEL_TOL && a3.abs() <= LABEL_TOL)
    }

    /// Symbolic Fourier transform with the convention
    /// F(f)(p) = ∫ f(x) e^{−i2πxp} dx.
    pub fn fourier(&self) -> Result<RealFun, LabelError> {
        let mut terms = Vec::new();
        for t in &self.terms {
            match t.atom {
                RealAtom::Gauss { a, b, a3 } => {
                    if a3.abs() > LABEL_TOL {
                        return Err(LabelError::NotClosedUnderFourier("cubic phase".into()));
                    }
                    if a.norm() <= LABEL_TOL {
                        // Pure character exp(b·x): needs b = i·2π·p0.
                        if b.re.abs() > 1e-9 * (1.0 + b.im.abs()) {
                            return Err(LabelError::NotClosedUnderFourier(
                                "unbounded exponential".into(),
                            ));
                        }
                        let p0 = b.im / (2.0 * PI);
                        terms.push(RealTerm {
                            weight: t.weight,
                            atom: RealAtom::PointMass { x0: p0 },
                        });
                    } else {
                        // ∫ exp(ax² + bx − i2πxp) dx = sqrt(π/(−a)) exp((b−i2πp)²/(−4a))
                        let (root, ok) = gauss_integral_root(a);
                        if !ok {
                            return Err(LabelError::NotClosedUnderFourier(
                                "growing gaussian".into(),
                            ));
                        }
                        // (b − i2πp)² / (−4a) = b²/(−4a) + p·(i4πb)/(4a)·… expand:
                        //   = (−1/4a)(b² − i4πbp − 4π²p²)
                        let na = cx(-1.0, 0.0) / (4.0 * a);
                        let a_new = na * (-4.0 * PI * PI);
                        let b_new = na * (b * cx(0.0, -4.0 * PI));
                        let c_new = na * (b * b);
                        terms.push(RealTerm {
                            weight: t.weight * root * c_new.exp(),
                            atom: RealAtom::Gauss {
                                a: a_new,
                                b: b_new,
                                a3: 0.0,
                            },
                        });
                    }
                }
                RealAtom::PointMass { x0 } => {
                    // F(δ(x−x0)) = e^{−i2πpx0} = χ_{x0}
                    terms.push(RealTerm {
                        weight: t.weight,
                        atom: RealAtom::Gauss {
                            a: cx(0.0, 0.0),
                            b: cx(0.0, -2.0 * PI * x0),
                            a3: 0.0,
                        },
                    });
                }
                RealAtom::Comb {
                    spacing,
                    offset,
                    modulation,
                    envelope,
                } => {
                    if envelope.is_some() {
                        return Err(LabelError::NotClosedUnderFourier(
                            "enveloped comb".into(),
                        ));
                    }
                    // Poisson summation:
                    // F(Σ_k e^{i2πμx} δ(x − o − ks))(p)
                    //   = (1/s) e^{i2πμo} Σ_j e^{−i2πop} δ(p − μ − j/s)
                    let phase = cx(0.0, 2.0 * PI * modulation * offset).exp();
                    terms.push(RealTerm {
                        weight: t.weight * phase / spacing,
                        atom: RealAtom::Comb {
                            spacing: 1.0 / spacing,
                            offset: modulation,
                            modulation: -offset,
                            envelope: None,
                        },
                    });
                }
            }
        }
        Ok(RealFun { terms }.normalized())
    }

    /// Symbolic integral ∫ f(x) dx where a closed form exists.
    pub fn integral(&self) -> Result<C64, LabelError> {
        let mut acc = cx(0.0, 0.0);
        for t in &self.terms {
            match t.atom {
                RealAtom::Gauss { a, b, a3 } => {
                    if a3.abs() > LABEL_TOL {
                        return Err(LabelError::NoClosedIntegral("cubic phase".into()));
                    }
                    if a.norm() <= LABEL_TOL {
                        return Err(LabelError::NoClosedIntegral("constant/character".into()));
                    }
                    let (root, ok) = gauss_integral_root(a);
                    if !ok {
                        return Err(LabelError::NoClosedIntegral("growing gaussian".into()));
                    }
                    acc += t.weight * root * ((b * b) / (-4.0 * a)).exp();
                }
                RealAtom::PointMass { .. } => acc += t.weight,
                RealAtom::Comb { .. } => {
                    return Err(LabelError::NoClosedIntegral("comb".into()))
                }
            }
        }
        Ok(acc)
    }

    /// Sort terms by atom fingerprint and merge coefficients; drop zeros.
    pub fn normalized(&self) -> RealFun {
        let mut terms = self.terms.clone();
        terms.sort_by(|a, b| {
            atom_key(&a.atom)
                .partial_cmp(&atom_key(&b.atom))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut merged: Vec<RealTerm> = Vec::new();
        for t in terms {
            if let Some(last) = merged.last_mut() {
                if atoms_close(&last.atom, &t.atom) {
                    last.weight += t.weight;
                    continue;
                }
            }
            merged.push(t);
        }
        merged.retain(|t| t.weight.norm() > LABEL_TOL);
        RealFun { terms: merged }
    }

    /// Syntactic equality on normal forms, coefficients compared to 1e−12.
    pub fn syn_eq(&self, other: &RealFun) -> bool {
        let a = self.normalized();
        let b = other.normalized();
        a.terms.len() == b.terms.len()
            && a.terms
                .iter()
                .zip(b.terms.iter())
                .all(|(s, t)| atoms_close(&s.atom, &t.atom) && c_close(s.weight, t.weight))
    }
}

/// √(π/(−a)) with the Fresnel branch e^{i(π/4)·sign(Im a)}·√(π/|a|) when a is
/// purely imaginary. Returns (value, in_fragment).
fn gauss_integral_root(a: C64) -> (C64, bool) {
    if a.re < -LABEL_TOL {
        ((PI / -a).sqrt(), true)
    } else if a.re.abs() <= LABEL_TOL && a.im.abs() > LABEL_TOL {
        let s = a.im.signum();
        let mag = (PI / a.norm()).sqrt();
        (C64::from_polar(mag, s * PI / 4.0), true)
    } else {
        (cx(0.0, 0.0), false)
    }
}

fn mul_real_terms(s: &RealTerm, t: &RealTerm) -> Result<Option<RealTerm>, LabelError> {
    use RealAtom::*;
    let w = s.weight * t.weight;
    let atom = match (&s.atom, &t.atom) {
        (Gauss { a: a1, b: b1, a3: c1 }, Gauss { a: a2, b: b2, a3: c2 }) => Gauss {
            a: a1 + a2,
            b: b1 + b2,
            a3: c1 + c2,
        },
        (PointMass { x0 }, Gauss { .. }) => {
            let v = RealFun {
                terms: vec![RealTerm {
                    weight: cx(1.0, 0.0),
                    atom: t.atom,
                }],
            }
            .eval(*x0)?;
            return Ok(Some(RealTerm {
                weight: w * v,
                atom: PointMass { x0: *x0 },
            }));
        }
        (Gauss { .. }, PointMass { x0 }) => {
            let v = RealFun {
                terms: vec![RealTerm {
                    weight: cx(1.0, 0.0),
                    atom: s.atom,
                }],
            }
            .eval(*x0)?;
            return Ok(Some(RealTerm {
                weight: w * v,
                atom: PointMass { x0: *x0 },
            }));
        }
        (PointMass { x0: p }, PointMass { x0: q }) => {
            if (p - q).abs() <= LABEL_TOL {
                return Err(LabelError::IllFormedProduct);
            }
            return Ok(None); // deltas at distinct points multiply to zero
        }
        (
            Comb {
                spacing,
                offset,
                modulation,
                envelope,
            },
            Gauss { a, b, a3 },
        )
        | (
            Gauss { a, b, a3 },
            Comb {
                spacing,
                offset,
                modulation,
                envelope,
            },
        ) => {
            if a3.abs() > LABEL_TOL {
                return Err(LabelError::IllFormedProduct);
            }
            let (ea, eb) = envelope.unwrap_or((cx(0.0, 0.0), cx(0.0, 0.0)));
            Comb {
                spacing: *spacing,
                offset: *offset,
                modulation: *modulation,
                envelope: Some((ea + a, eb + b)),
            }
        }
        (Comb { spacing, offset, .. }, PointMass { x0 })
        | (PointMass { x0 }, Comb { spacing, offset, .. }) => {
            let k = (x0 - offset) / spacing;
            if (k - k.round()).abs() <= 1e-9 {
                return Err(LabelError::IllFormedProduct);
            }
            return Ok(None);
        }
        (Comb { .. }, Comb { .. }) => return Err(LabelError::IllFormedProduct),
    };
    Ok(Some(RealTerm { weight: w, atom }))
}

fn atom_key(a: &RealAtom) -> (u8, f64, f64, f64, f64, f64, f64, f64, f64) {
    match a {
        RealAtom::Gauss { a, b, a3 } => (0, a.re, a.im, b.re, b.im, *a3, 0.0, 0.0, 0.0),
        RealAtom::PointMass { x0 } => (1, *x0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
        RealAtom::Comb {
            spacing,
            offset,
            modulation,
            envelope,
        } => {
            let (ea, eb) = envelope.unwrap_or((cx(0.0, 0.0), cx(0.0, 0.0)));
            (2, *spacing, *offset, *modulation, ea.re, ea.im, eb.re, eb.im, 0.0)
        }
    }
}

fn atoms_close(a: &RealAtom, b: &RealAtom) -> bool {
    let ka = atom_key(a);
    let kb = atom_key(b);
    if ka.0 != kb.0 {
        return false;
    }
    let va = [ka.1, ka.2, ka.3, ka.4, ka.5, ka.6, ka.7, ka.8];
    let vb = [kb.1, kb.2, kb.3, kb.4, kb.5, kb.6, kb.7, kb.8];
    va.iter()
        .zip(vb.iter())
        .all(|(x, y)| (x - y).abs() <= LABEL_TOL * (1.0 + x.abs().max(y.abs())))
}

// ---------------------------------------------------------------------------
// NatFun
// ---------------------------------------------------------------------------

/// One term of a [`NatFun`] in product normal form:
/// weight · k^n · e^{i·t2·n²} · √(n!)^p · [n = m].
///
/// Any phase e^{i·t1·n} is folded into the argument of `geom`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NatTerm {
    pub weight: C64,
    pub geom: C64,
    pub quad_phase: f64,
    pub factpow: i32,
    pub kron: Option<u64>,
}

impl NatTerm {
    fn eval(&self, n: u64) -> C64 {
        if let Some(m) = self.kron {
            if m != n {
                return cx(0.0, 0.0);
            }
        }
        let nf = n as f64;
        let mut v = self.weight * self.geom.powu(n as u32);
        v *= cx(0.0, self.quad_phase * nf * nf).exp();
        if self.factpow != 0 {
            v *= sqrt_factorial(n).powi(self.factpow);
        }
        v
    }
}

/// A function ℕ → ℂ in closed symbolic form.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NatFun {
    pub terms: Vec<NatTerm>,
}

pub fn sqrt_factorial(n: u64) -> f64 {
    let mut v = 1.0f64;
    for i in 1..=n {
        v *= (i as f64).sqrt();
    }
    v
}

impl NatFun {
    pub fn zero() -> Self {
        NatFun { terms: vec![] }
    }

    pub fn constant(w: C64) -> Self {
        NatFun {
            terms: vec![NatTerm {
                weight: w,
                geom: cx(1.0, 0.0),
                quad_phase: 0.0,
                factpow: 0,
                kron: None,
            }],
        }
    }

    pub fn one() -> Self {
        Self::constant(cx(1.0, 0.0))
    }

    /// n ↦ kⁿ. `geom(0)` normalizes to the Kronecker delta at 0.
    pub fn geom(k: C64) -> Self {
        NatFun {
            terms: vec![NatTerm {
                weight: cx(1.0, 0.0),
                geom: k,
                quad_phase: 0.0,
                factpow: 0,
                kron: None,
            }],
        }
        .normalized()
    }

    /// n ↦ e^{i(t1·n + t2·n²)}.
    pub fn phase(t1: f64, t2: f64) -> Self {
        NatFun {
            terms: vec![NatTerm {
                weight: cx(1.0, 0.0),
                geom: C64::from_polar(1.0, t1),
                quad_phase: t2,
                factpow: 0,
                kron: None,
            }],
        }
    }

    /// n ↦ δ_{n,m}.
    pub fn kron(m: u64) -> Self {
        NatFun {
            terms: vec![NatTerm {
                weight: cx(1.0, 0.0),
                geom: cx(1.0, 0.0),
                quad_phase: 0.0,
                factpow: 0,
                kron: Some(m),
            }],
        }
    }

    /// n ↦ √(n!)^p.
    pub fn factpow(p: i32) -> Self {
        NatFun {
            terms: vec![NatTerm {
                weight: cx(1.0, 0.0),
                geom: cx(1.0, 0.0),
                quad_phase: 0.0,
                factpow: p,
                kron: None,
            }],
        }
    }

    /// γ_k for a spider with `legs` legs: n ↦ kⁿ·√(n!)^(legs−1).
    pub fn gamma(k: C64, legs: usize) -> Self {
        NatFun {
            terms: vec![NatTerm {
                weight: cx(1.0, 0.0),
                geom: k,
                quad_phase: 0.0,
                factpow: legs as i32 - 1,
                kron: None,
            }],
        }
        .normalized()
    }

    pub fn add(&self, other: &NatFun) -> NatFun {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        NatFun { terms }.normalized()
    }

    pub fn scale(&self, w: C64) -> NatFun {
        NatFun {
            terms: self
                .terms
                .iter()
                .map(|t| NatTerm {
                    weight: t.weight * w,
                    ..*t
                })
                .collect(),
        }
        .normalized()
    }

    pub fn mul(&self, other: &NatFun) -> NatFun {
        let mut terms = Vec::new();
        for s in &self.terms {
            for t in &other.terms {
                let kron = match (s.kron, t.kron) {
                    (Some(a), Some(b)) if a != b => continue,
                    (Some(a), _) => Some(a),
                    (_, k) => k,
                };
                terms.push(NatTerm {
                    weight: s.weight * t.weight,
                    geom: s.geom * t.geom,
                    quad_phase: s.quad_phase + t.quad_phase,
                    factpow: s.factpow + t.factpow,
                    kron,
                });
            }
        }
        NatFun { terms }.normalized()
    }

    pub fn conj(&self) -> NatFun {
        NatFun {
            terms: self
                .terms
                .iter()
                .map(|t| NatTerm {
                    weight: t.weight.conj(),
                    geom: t.geom.conj(),
                    quad_phase: -t.quad_phase,
                    factpow: t.factpow,
                    kron: t.kron,
                })
                .collect(),
        }
        .normalized()
    }

    pub fn eval(&self, n: u64) -> C64 {
        self.terms.iter().map(|t| t.eval(n)).sum()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && {
            let t = &self.terms[0];
            c_close(t.weight, cx(1.0, 0.0))
                && c_close(t.geom, cx(1.0, 0.0))
                && t.quad_phase.abs() <= LABEL_TOL
                && t.factpow == 0
                && t.kron.is_none()
        }
    }

    /// Collapse kron terms (evaluate the rest of the product at the point) and
    /// rewrite geom(0) as kron(0).
    pub fn normalized(&self) -> NatFun {
        let mut terms: Vec<NatTerm> = Vec::new();
        for t in &self.terms {
            let mut t = *t;
            if t.geom.norm() <= LABEL_TOL {
                // 0ⁿ = δ₀
                t.geom = cx(1.0, 0.0);
                t.kron = match t.kron {
                    None | Some(0) => Some(0),
                    Some(_) => continue,
                };
            }
            if let Some(m) = t.kron {
                let v = NatTerm {
                    weight: t.weight,
                    kron: None,
                    ..t
                }
                .eval(m);
                t = NatTerm {
                    weight: v,
                    geom: cx(1.0, 0.0),
                    quad_phase: 0.0,
                    factpow: 0,
                    kron: Some(m),
                };
            }
            terms.push(t);
        }
        terms.sort_by(|a, b| {
            nat_key(a)
                .partial_cmp(&nat_key(b))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut merged: Vec<NatTerm> = Vec::new();
        for t in terms {
            if let Some(last) = merged.last_mut() {
                if nat_atoms_close(last, &t) {
                    last.weight += t.weight;
                    continue;
                }
            }
            merged.push(t);
        }
        merged.retain(|t| t.weight.norm() > LABEL_TOL);
        NatFun { terms: merged }
    }

    pub fn syn_eq(&self, other: &NatFun) -> bool {
        let a = self.normalized();
        let b = other.normalized();
        a.terms.len() == b.terms.len()
            && a.terms
                .iter()
                .zip(b.terms.iter())
                .all(|(s, t)| nat_atoms_close(s, t) && c_close(s.weight, t.weight))
    }
}

fn nat_key(t: &NatTerm) -> (i64, f64, f64, f64, i32) {
    (
        t.kron.map(|m| m as i64).unwrap_or(-1),
        t.geom.re,
        t.geom.im,
        t.quad_phase,
        t.factpow,
    )
}

fn nat_atoms_close(a: &NatTerm, b: &NatTerm) -> bool {
    a.kron == b.kron
        && c_close(a.geom, b.geom)
        && (a.quad_phase - b.quad_phase).abs() <= LABEL_TOL * (1.0 + a.quad_phase.abs())
        && a.factpow == b.factpow
}

// ---------------------------------------------------------------------------
// LabelFun: either domain
// ---------------------------------------------------------------------------

/// A spider label over either domain.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelFun {
    Real(RealFun),
    Nat(NatFun),
}

impl LabelFun {
    /// If the label is a constant function, return its value. Constants are
    /// domain-polymorphic: they combine with labels over either domain.
    pub fn as_constant(&self) -> Option<C64> {
        match self {
            LabelFun::Real(f) => {
                let f = f.normalized();
                if f.terms.is_empty() {
                    return Some(cx(0.0, 0.0));
                }
                if f.terms.len() == 1 {
                    if let RealAtom::Gauss { a, b, a3 } = f.terms[0].atom {
                        if a.norm() <= LABEL_TOL && b.norm() <= LABEL_TOL && a3.abs() <= LABEL_TOL
                        {
                            return Some(f.terms[0].weight);
                        }
                    }
                }
                None
            }
            LabelFun::Nat(f) => {
                let f = f.normalized();
                if f.terms.is_empty() {
                    return Some(cx(0.0, 0.0));
                }
                if f.terms.len() == 1 {
                    let t = &f.terms[0];
                    if c_close(t.geom, cx(1.0, 0.0))
                        && t.quad_phase.abs() <= LABEL_TOL
                        && t.factpow == 0
                        && t.kron.is_none()
                    {
                        return Some(t.weight);
                    }
                }
                None
            }
        }
    }

    pub fn mul(&self, other: &LabelFun) -> Result<LabelFun, LabelError> {
        match (self, other) {
            (LabelFun::Real(f), LabelFun::Real(g)) => Ok(LabelFun::Real(f.mul(g)?)),
            (LabelFun::Nat(f), LabelFun::Nat(g)) => Ok(LabelFun::Nat(f.mul(g))),
            (a, b) => {
                if let Some(w) = a.as_constant() {
                    Ok(b.scale(w))
                } else if let Some(w) = b.as_constant() {
                    Ok(a.scale(w))
                } else {
                    Err(LabelError::DomainMismatch)
                }
            }
        }
    }

    pub fn scale(&self, w: C64) -> LabelFun {
        match self {
            LabelFun::Real(f) => LabelFun::Real(f.scale(w)),
            LabelFun::Nat(f) => LabelFun::Nat(f.scale(w)),
        }
    }

    pub fn syn_eq(&self, other: &LabelFun) -> bool {
        match (self, other) {
            (LabelFun::Real(f), LabelFun::Real(g)) => f.syn_eq(g),
            (LabelFun::Nat(f), LabelFun::Nat(g)) => f.syn_eq(g),
            _ => false,
        }
    }

    pub fn conj(&self) -> LabelFun {
        match self {
            LabelFun::Real(f) => LabelFun::Real(f.conj()),
            LabelFun::Nat(f) => LabelFun::Nat(f.conj()),
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            LabelFun::Real(f) => f.is_one(),
            LabelFun::Nat(f) => f.is_one(),
        }
    }

    /// A collision-resistant-enough fingerprint for canonical hashing.
    pub fn fingerprint(&self) -> u64 {
        fn q(x: f64) -> i64 {
            (x * 1e9).round() as i64
        }
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut mix = |v: i64| {
            h ^= v as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        };
        match self {
            LabelFun::Real(f) => {
                mix(1);
                for t in &f.normalized().terms {
                    mix(q(t.weight.re));
                    mix(q(t.weight.im));
                    let k = atom_key(&t.atom);
                    mix(k.0 as i64);
                    for v in [k.1, k.2, k.3, k.4, k.5, k.6, k.7, k.8] {
                        mix(q(v));
                    }
                }
            }
            LabelFun::Nat(f) => {
                mix(2);
                for t in &f.normalized().terms {
                    mix(q(t.weight.re));
                    mix(q(t.weight.im));
                    let k = nat_key(t);
                    mix(k.0);
                    mix(q(k.1));
                    mix(q(k.2));
                    mix(q(k.3));
                    mix(k.4 as i64);
                }
            }
        }
        h
    }
}

// ---------------------------------------------------------------------------
// Textual syntax
// ---------------------------------------------------------------------------

fn fmt_c(v: C64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if v.im.abs() <= LABEL_TOL {
        write!(f, "{}", v.re)
    } else if v.re.abs() <= LABEL_TOL {
        write!(f, "{}i", v.im)
    } else {
        write!(f, "{}{}{}i", v.re, if v.im >= 0.0 { "+" } else { "" }, v.im)
    }
}

impl fmt::Display for RealFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "(")?;
            fmt_c(t.weight, f)?;
            write!(f, ")*")?;
            match t.atom {
                RealAtom::Gauss { a, b, a3 } if a3.abs() > LABEL_TOL => {
                    write!(f, "cubic(")?;
                    fmt_c(a, f)?;
                    write!(f, ",")?;
                    fmt_c(b, f)?;
                    write!(f, ",{})", a3)?;
                }
                RealAtom::Gauss { a, b, .. } => {
                    write!(f, "gauss(")?;
                    fmt_c(a, f)?;
                    write!(f, ",")?;
                    fmt_c(b, f)?;
                    write!(f, ",0)")?;
                }
                RealAtom::PointMass { x0 } => write!(f, "delta({})", x0)?,
                RealAtom::Comb {
                    spacing,
                    offset,
                    modulation,
                    envelope,
                } => {
                    write!(f, "comb({},{}", spacing, offset)?;
                    if modulation.abs() > LABEL_TOL {
                        write!(f, ",mod={}", modulation)?;
                    }
                    if let Some((a, b)) = envelope {
                        write!(f, ",env=")?;
                        fmt_c(a, f)?;
                        write!(f, ";")?;
                        fmt_c(b, f)?;
                    }
                    write!(f, ")")?;
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for NatFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "(")?;
            fmt_c(t.weight, f)?;
            write!(f, ")")?;
            if let Some(m) = t.kron {
                write!(f, "*kron({})", m)?;
                continue;
            }
            if !c_close(t.geom, cx(1.0, 0.0)) {
                write!(f, "*geom(")?;
                fmt_c(t.geom, f)?;
                write!(f, ")")?;
            }
            if t.quad_phase.abs() > LABEL_TOL {
                write!(f, "*phase(0,{})", t.quad_phase)?;
            }
            if t.factpow != 0 {
                write!(f, "*factpow({})", t.factpow)?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for LabelFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelFun::Real(x) => write!(f, "{}", x),
            LabelFun::Nat(x) => write!(f, "{}", x),
        }
    }
}

/// Parser for the textual label syntax used by the CLI and JSON files.
///
/// Grammar: sums of products of atoms; atoms are
/// `gauss(a,b,c)`, `cubic(a,b,a3)`, `chi(x0)`, `chibar(p0)`, `delta(x0)`,
/// `comb(s,o)`, `geom(k)`, `phase(t1,t2)`, `kron(m)`, `factpow(p)`, and bare
/// complex constants. Complex literals look like `1.5`, `2i`, `1+2i`, `-3-4i`.
pub mod parse {
    use super::*;

    pub fn parse_label(s: &str) -> Result<LabelFun, LabelError> {
        let mut p = Parser {
            src: s,
            pos: 0,
        };
        let lbl = p.sum()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(LabelError::Parse(
                s.into(),
                format!("unexpected trailing input at byte {}", p.pos),
            ));
        }
        Ok(lbl)
    }

    struct Parser<'a> {
        src: &'a str,
        pos: usize,
    }

    enum Val {
        Scalar(C64),
        Label(LabelFun),
    }

    impl<'a> Parser<'a> {
        fn err<T>(&self, msg: &str) -> Result<T, LabelError> {
            Err(LabelError::Parse(self.src.into(), msg.into()))
        }

        fn skip_ws(&mut self) {
            while self.src[self.pos..].starts_with(' ') {
                self.pos += 1;
            }
        }

        fn peek(&mut self) -> Option<char> {
            self.skip_ws();
            self.src[self.pos..].chars().next()
        }

        fn eat(&mut self, c: char) -> bool {
            if self.peek() == Some(c) {
                self.pos += c.len_utf8();
                true
            } else {
                false
            }
        }

        fn sum(&mut self) -> Result<LabelFun, LabelError> {
            let mut acc = self.product()?;
            loop {
                self.skip_ws();
                let neg = if self.eat('+') {
                    false
                } else if self.src[self.pos..].starts_with('-')
                    && !acc_is_start(self.src, self.pos)
                {
                    self.pos += 1;
                    true
                } else {
                    break;
                };
                let mut rhs = self.product()?;
                if neg {
                    rhs = scale_label(&rhs, cx(-1.0, 0.0));
                }
                acc = add_labels(&acc, &rhs)?;
            }
            Ok(acc)
        }

        fn product(&mut self) -> Result<LabelFun, LabelError> {
            let mut acc = self.atom()?;
            while self.eat('*') {
                let rhs = self.atom()?;
                acc = mul_vals(acc, rhs)?;
            }
            match acc {
                Val::Scalar(w) => Ok(LabelFun::Real(RealFun::constant(w))),
                Val::Label(l) => Ok(l),
            }
        }

        fn atom(&mut self) -> Result<Val, LabelError> {
            self.skip_ws();
            if self.eat('(') {
                let inner = self.sum()?;
                if !self.eat(')') {
                    return self.err("expected `)`");
                }
                return Ok(Val::Label(inner));
            }
            let rest = &self.src[self.pos..];
            let name_len = rest
                .find(|c: char| !c.is_ascii_alphabetic())
                .unwrap_or(rest.len());
            let name = &rest[..name_len];
            match name {
                "gauss" | "cubic" => {
                    self.pos += name_len;
                    let args = self.args(3)?;
                    if name == "gauss" {
                        Ok(Val::Label(LabelFun::Real(RealFun::gauss(
                            args[0], args[1], args[2],
                        ))))
                    } else {
                        if args[2].im.abs() > LABEL_TOL {
                            return self.err("cubic coefficient must be real");
                        }
                        let mut l = RealFun::gauss(args[0], args[1], cx(0.0, 0.0));
                        if let RealAtom::Gauss { a3, .. } = &mut l.terms[0].atom {
                            *a3 = args[2].re;
                        }
                        Ok(Val::Label(LabelFun::Real(l)))
                    }
                }
                "chi" => {
                    self.pos += name_len;
                    let a = self.args(1)?;
                    Ok(Val::Label(LabelFun::Real(RealFun::chi(a[0].re))))
                }
                "chibar" => {
                    self.pos += name_len;
                    let a = self.args(1)?;
                    Ok(Val::Label(LabelFun::Real(RealFun::chi_bar(a[0].re))))
                }
                "delta" => {
                    self.pos += name_len;
                    let a = self.args(1)?;
                    Ok(Val::Label(LabelFun::Real(RealFun::point_mass(
                        a[0].re,
                        cx(1.0, 0.0),
                    ))))
                }
                "comb" => {
                    self.pos += name_len;
                    let a = self.args(2)?;
                    Ok(Val::Label(LabelFun::Real(RealFun::comb(a[0].re, a[1].re))))
                }
                "geom" => {
                    self.pos += name_len;
                    let a = self.args(1)?;
                    Ok(Val::Label(LabelFun::Nat(NatFun::geom(a[0]))))
                }
                "phase" => {
                    self.pos += name_len;
                    let a = self.args(2)?;
                    Ok(Val::Label(LabelFun::Nat(NatFun::phase(a[0].re, a[1].re))))
                }
                "kron" => {
                    self.pos += name_len;
                    let a = self.args(1)?;
                    if a[0].re < 0.0 || (a[0].re - a[0].re.round()).abs() > LABEL_TOL {
                        return self.err("kron argument must be a natural number");
                    }
                    Ok(Val::Label(LabelFun::Nat(NatFun::kron(a[0].re as u64))))
                }
                "factpow" => {
                    self.pos += name_len;
                    let a = self.args(1)?;
                    Ok(Val::Label(LabelFun::Nat(NatFun::factpow(a[0].re as i32))))
                }
                _ => {
                    let w = self.complex()?;
                    Ok(Val::Scalar(w))
                }
            }
        }

        fn args(&mut self, n: usize) -> Result<Vec<C64>, LabelError> {
            if !self.eat('(') {
                return self.err("expected `(`");
            }
            let mut out = Vec::new();
            for i in 0..n {
                if i > 0 && !self.eat(',') {
                    return self.err("expected `,`");
                }
                out.push(self.complex()?);
            }
            if !self.eat(')') {
                return self.err("expected `)`");
            }
            Ok(out)
        }

        /// `1.5`, `2i`, `1+2i`, `-1-2i`, `i`, `-i`, `pi`
        fn complex(&mut self) -> Result<C64, LabelError> {
            self.skip_ws();
            let first = self.signed_part()?;
            self.skip_ws();
            let rest = &self.src[self.pos..];
            if rest.starts_with('+') || (rest.starts_with('-') && first.im.abs() <= LABEL_TOL) {
                let save = self.pos;
                let second = self.signed_part()?;
                if second.im.abs() > LABEL_TOL {
                    return Ok(first + second);
                }
                self.pos = save;
            }
            Ok(first)
        }

        fn signed_part(&mut self) -> Result<C64, LabelError> {
            self.skip_ws();
            let mut sign = 1.0;
            if self.eat('-') {
                sign = -1.0;
            } else {
                let _ = self.eat('+');
            }
            self.skip_ws();
            let rest = &self.src[self.pos..];
            if rest.starts_with('i')
                && !rest[1..].starts_with(|c: char| c.is_ascii_alphanumeric())
            {
                self.pos += 1;
                return Ok(cx(0.0, sign));
            }
            if rest.starts_with("pi") {
                self.pos += 2;
                return Ok(cx(sign * PI, 0.0));
            }
            let num_len = rest
                .find(|c: char| !(c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E'))
                .unwrap_or(rest.len());
            // avoid swallowing the exponent sign
            let mut num_len = num_len;
            if num_len > 0 && (rest[..num_len].ends_with('e') || rest[..num_len].ends_with('E')) {
                let after = &rest[num_len..];
                if after.starts_with('+') || after.starts_with('-') {
                    let extra = after[1..]
                        .find(|c: char| !c.is_ascii_digit())
                        .unwrap_or(after.len() - 1);
                    num_len += 1 + extra;
                }
            }
            if num_len == 0 {
                return self.err("expected a number");
            }
            let v: f64 = rest[..num_len]
                .parse()
                .map_err(|e| LabelError::Parse(self.src.into(), format!("{e}")))?;
            self.pos += num_len;
            if self.src[self.pos..].starts_with('i') {
                self.pos += 1;
                Ok(cx(0.0, sign * v))
            } else {
                Ok(cx(sign * v, 0.0))
            }
        }
    }

    fn acc_is_start(_src: &str, _pos: usize) -> bool {
        false
    }

    fn scale_label(l: &LabelFun, w: C64) -> LabelFun {
        match l {
            LabelFun::Real(f) => LabelFun::Real(f.scale(w)),
            LabelFun::Nat(f) => LabelFun::Nat(f.scale(w)),
        }
    }

    fn add_labels(a: &LabelFun, b: &LabelFun) -> Result<LabelFun, LabelError> {
        match (a, b) {
            (LabelFun::Real(f), LabelFun::Real(g)) => Ok(LabelFun::Real(f.add(g))),
            (LabelFun::Nat(f), LabelFun::Nat(g)) => Ok(LabelFun::Nat(f.add(g))),
            _ => Err(LabelError::DomainMismatch),
        }
    }

    fn mul_vals(a: Val, b: Val) -> Result<Val, LabelError> {
        Ok(match (a, b) {
            (Val::Scalar(x), Val::Scalar(y)) => Val::Scalar(x * y),
            (Val::Scalar(x), Val::Label(l)) | (Val::Label(l), Val::Scalar(x)) => {
                Val::Label(scale_label(&l, x))
            }
            (Val::Label(x), Val::Label(y)) => Val::Label(x.mul(&y)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geom_product() {
        let f = NatFun::geom(cx(2.0, 0.0));
        let g = NatFun::geom(cx(3.0, 0.0));
        assert!(f.mul(&g).syn_eq(&NatFun::geom(cx(6.0, 0.0))));
    }

    #[test]
    fn gauss_product_adds_exponents() {
        let f = RealFun::gauss(cx(-0.5, 0.0), cx(1.0, 0.0), cx(0.1, 0.0));
        let g = RealFun::gauss(cx(-0.25, 0.0), cx(0.0, 2.0), cx(-0.1, 0.0));
        let h = f.mul(&g).unwrap();
        let want = RealFun::gauss(cx(-0.75, 0.0), cx(1.0, 2.0), cx(0.0, 0.0));
        assert!(h.syn_eq(&want));
    }

    #[test]
    fn point_mass_times_gauss_evaluates() {
        let f = RealFun::point_mass(1.0, cx(1.0, 0.0));
        let g = RealFun::gauss(cx(-0.5, 0.0), cx(0.0, 0.0), cx(0.0, 0.0));
        let h = f.mul(&g).unwrap();
        let want = RealFun::point_mass(1.0, cx((-0.5f64).exp(), 0.0));
        assert!(h.syn_eq(&want));
    }

    #[test]
    fn point_mass_collision_is_flagged() {
        let f = RealFun::point_mass(1.0, cx(1.0, 0.0));
        assert_eq!(f.mul(&f), Err(LabelError::IllFormedProduct));
    }

    #[test]
    fn distinct_point_masses_vanish() {
        let f = RealFun::point_mass(1.0, cx(1.0, 0.0));
        let g = RealFun::point_mass(2.0, cx(1.0, 0.0));
        assert!(f.mul(&g).unwrap().terms.is_empty());
    }

    #[test]
    fn eval_geom_i() {
        // eval(geom(i), 2) = i² = −1
        let f = NatFun::geom(cx(0.0, 1.0));
        let v = f.eval(2);
        assert!((v - cx(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn eval_fourier_label_at_one() {
        // phase(−π/2, 0) at n = 1 is (−i)
        let f = NatFun::phase(-PI / 2.0, 0.0);
        let v = f.eval(1);
        assert!((v - cx(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn eval_gauss_at_zero() {
        let f = RealFun::gauss(cx(-0.5, 0.0), cx(0.0, 0.0), cx(0.0, 0.0));
        assert!((f.eval(0.0).unwrap() - cx(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn fourier_point_mass_is_chi() {
        let f = RealFun::point_mass(0.7, cx(1.0, 0.0));
        let g = f.fourier().unwrap();
        assert!(g.syn_eq(&RealFun::chi(0.7)));
    }

    #[test]
    fn fourier_fixpoint_gaussian() {
        // e^{−πx²} is a fixed point of this Fourier convention
        let f = RealFun::gauss(cx(-PI, 0.0), cx(0.0, 0.0), cx(0.0, 0.0));
        let g = f.fourier().unwrap();
        assert!(g.syn_eq(&f), "got {g}");
    }

    #[test]
    fn fourier_constant_is_delta() {
        let f = RealFun::one();
        let g = f.fourier().unwrap();
        assert!(g.syn_eq(&RealFun::point_mass(0.0, cx(1.0, 0.0))));
    }

    #[test]
    fn fourier_comb_poisson() {
        let f = RealFun::comb(2.0, 0.0);
        let g = f.fourier().unwrap();
        let want = RealFun::comb(0.5, 0.0).scale(cx(0.5, 0.0));
        assert!(g.syn_eq(&want), "got {g}");
    }

    #[test]
    fn fourier_involution_on_characters() {
        // F(F(δ(x0))) should be δ(−x0) read reversed: F(χ_{x0}) = δ(−x0)
        let f = RealFun::chi(0.3);
        let g = f.fourier().unwrap();
        assert!(g.syn_eq(&RealFun::point_mass(-0.3, cx(1.0, 0.0))), "got {g}");
    }

    #[test]
    fn geom_zero_is_kron_zero() {
        let f = NatFun::geom(cx(0.0, 0.0));
        assert!(f.syn_eq(&NatFun::kron(0)));
        assert!((f.eval(0) - cx(1.0, 0.0)).norm() < 1e-12);
        assert!(f.eval(3).norm() < 1e-12);
    }

    #[test]
    fn gamma_family() {
        let g = NatFun::gamma(cx(2.0, 0.0), 3);
        // γ₂(n) with 3 legs = 2ⁿ·√(n!)²= 2ⁿ·n!
        assert!((g.eval(3) - cx(48.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn mul_eval_compatible_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let f = RealFun::gauss(
                cx(-rng.gen_range(0.1..1.0), rng.gen_range(-1.0..1.0)),
                cx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                cx(0.0, 0.0),
            );
            let g = RealFun::gauss(
                cx(-rng.gen_range(0.1..1.0), rng.gen_range(-1.0..1.0)),
                cx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                cx(0.0, 0.0),
            );
            let x = rng.gen_range(-2.0..2.0);
            let lhs = f.mul(&g).unwrap().eval(x).unwrap();
            let rhs = f.eval(x).unwrap() * g.eval(x).unwrap();
            assert!((lhs - rhs).norm() < 1e-9);
        }
    }

    #[test]
    fn parse_roundtrip() {
        for s in [
            "gauss(-0.5,0,0)",
            "chi(0.25)",
            "delta(1.5)",
            "comb(2,0.5)",
            "geom(2)",
            "geom(i)",
            "phase(1.5,-0.25)",
            "kron(3)",
            "factpow(-1)",
            "geom(2)*factpow(1)",
            "0.5*delta(0) + 0.5*delta(1)",
            "gauss(-1+0.5i,2i,0)",
        ] {
            let l = parse::parse_label(s).unwrap_or_else(|e| panic!("parse {s}: {e}"));
            let printed = l.to_string();
            let l2 = parse::parse_label(&printed)
                .unwrap_or_else(|e| panic!("reparse `{printed}`: {e}"));
            assert!(l.syn_eq(&l2), "roundtrip {s} -> {printed}");
        }
    }
}
