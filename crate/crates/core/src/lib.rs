#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod exhaustion;
pub mod expr;
pub mod field;
pub mod geometry;
pub mod nonlinearity;
pub mod operator;
pub mod par;
pub mod potential;
pub mod quadrature;
pub mod solver;
pub mod sparse;
pub mod thinness;
pub mod verify;
