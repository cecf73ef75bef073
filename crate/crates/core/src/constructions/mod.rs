//! Desk-scale reproductions of the quantitative constructions: harmonic
//! divergence, the `1/4` non-membership bound, dyadic `f_n` and the Fatou
//! mechanics, the Rademacher embedding of `ℓ1(Γ)`, and order-interval spread.

mod dyadic;
mod harmonic;
mod interval;
mod rademacher;

pub use dyadic::{dyadic_fn, fatou_suite, fatou_target, DyadicGrid, FatouReport, NormCheck, MAX_RESOLUTION};
pub use harmonic::{harmonic_certificate, harmonic_number, nonmember_distance, HarmonicReport, NonmemberReport};
pub use interval::{interval_element, interval_spread, SpreadReport, ORDER_SAMPLES};
pub use rademacher::{abs_sum, rademacher_embedding, rademacher_operator, xi, RademacherReport};

use serde::Serialize;

use crate::spaces::DualTuple;

pub(crate) fn tuple_coords<S: serde::Serializer>(t: &DualTuple, s: S) -> std::result::Result<S::Ok, S::Error> {
    t.coords().serialize(s)
}
