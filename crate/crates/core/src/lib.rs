//! Functional calculi for finite quaternionic operators `T = T0 + T1 e1 + T2 e2 + T3 e3`
//! with commuting real components: the S-functional calculus `f(T)`, the harmonic
//! (Q-resolvent) calculus `Df(T)`, their H∞ extensions, and a verification harness.

pub mod error;
pub mod hnum;
pub mod linalg;
pub mod poly;
pub mod qop;
pub mod sfun;
pub mod contour;
pub mod calculus;
pub mod harness;
