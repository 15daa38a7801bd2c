//! Running a preference with fixed parameters as a policy.

use rand::Rng;

use crate::bsq::{BsqError, BsqPreference};
use crate::interval::IntervalSet;
use crate::pomdp::{rollout_light, GPomdp, PomdpError, TrajectoryRecord};
use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum PolicyError {
    #[error(transparent)]
    Model(#[from] PomdpError),
    #[error(transparent)]
    Preference(#[from] BsqError),
}

fn check<T: Scalar>(pref: &BsqPreference<T>, theta: &[T]) -> Result<(), BsqError> {
    if theta.len() != pref.n_params() {
        return Err(BsqError::DimensionMismatch {
            expected: pref.n_params(),
            found: theta.len(),
        });
    }
    Ok(())
}

/// One episode of `pref` at `theta` for at most `h` steps.
pub fn simulate<T: Scalar, R: Rng + ?Sized>(
    m: &GPomdp<T>,
    pref: &BsqPreference<T>,
    theta: &[T],
    h: usize,
    rng: &mut R,
) -> Result<TrajectoryRecord<T>, PolicyError> {
    check(pref, theta)?;
    Ok(rollout_light(m, h, rng, |b| pref.choose_rule(b, theta))?)
}

/// Like [`simulate`], also returning the set of parameter values that would
/// have produced the same rule sequence on the same observations. The set
/// always contains `theta`.
pub fn simulate_with_interval<T: Scalar, R: Rng + ?Sized>(
    m: &GPomdp<T>,
    pref: &BsqPreference<T>,
    theta: &[T],
    h: usize,
    rng: &mut R,
) -> Result<(TrajectoryRecord<T>, IntervalSet<T>), PolicyError> {
    check(pref, theta)?;
    let mut region = pref.space.full();
    let rec = rollout_light(m, h, rng, |b| {
        let (rule, action) = pref.choose_rule(b, theta);
        let e = pref.effective_interval(rule, b);
        region = region.intersect(&e).expect("same space");
        (rule, action)
    })?;
    Ok((rec, region))
}
