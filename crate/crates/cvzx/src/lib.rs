//! cvzx: a graph-rewriting engine and verification toolkit for the
//! continuous-variable ZX calculus.
//!
//! Diagrams are open undirected multigraphs of labelled generators — Z, X and
//! Fock spiders, W nodes and multipliers — with two independent numerical
//! semantic backends (a finite lattice model and a truncated Fock space), a
//! decision procedure for the Gaussian fragment via affine Lagrangian
//! relations, interferometer and Gaussian-boson-sampling normal forms, and
//! hafnian-based GBS amplitudes.

pub mod diagram;
pub mod fock;
pub mod gaussian;
pub mod gbs;
pub mod gkp;
pub mod label;
pub mod lattice;
pub mod numeric;
pub mod rewrite;
pub mod rules;
