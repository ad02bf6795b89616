//! Exact calculator for the 2-local ku-homology module
//! `M_e = ku_*(L) ⊗_{ku_*} ku_*(L)` of the mod-`2^e` lens space `L`, and the
//! topological-complexity bounds it yields.

pub mod cli;
pub mod localhnf;
pub mod phicheck;
pub mod poly;
pub mod presentation;
pub mod queries;
pub mod tcbound;
pub mod twolocal;
