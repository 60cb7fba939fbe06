#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bayes;
pub mod classical;
pub mod design;
pub mod formula;
pub mod numerics;
pub mod summary;

#[cfg(test)]
mod testutil;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Formula(#[from] formula::FormulaError),
    #[error(transparent)]
    Design(#[from] design::DesignError),
    #[error(transparent)]
    Classical(#[from] classical::ClassicalError),
    #[error(transparent)]
    Bayes(#[from] bayes::BayesError),
    #[error(transparent)]
    Numerics(#[from] numerics::NumericsError),
}
