use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::case::GridCase;
use super::model::{AcModel, AcState};
use crate::error::{Error, Result};

/// Diagonal Gaussian spread of the state around the case operating point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateCovariance {
    /// Standard deviation of each non-reference angle (rad).
    pub angle_std: f64,
    /// Standard deviation of each voltage magnitude (p.u.).
    pub magnitude_std: f64,
}

impl Default for StateCovariance {
    fn default() -> Self {
        StateCovariance {
            angle_std: 0.01,
            magnitude_std: 0.005,
        }
    }
}

impl StateCovariance {
    fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if ok(self.angle_std) && ok(self.magnitude_std) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "state standard deviations must be finite and non-negative: {self:?}"
            )))
        }
    }
}

/// Noise standard deviation giving the requested SNR, with
/// `SNR = 10 log10(mean_k z0_k^2 / sigma^2)` and `z0` the noiseless
/// measurement at the operating state.
pub fn noise_std_for_snr(case: &GridCase, snr_db: f64) -> Result<f64> {
    let z0 = AcModel::new(case)?.measure(&case.operating_state())?;
    Ok(noise_std_from_reference(&z0, snr_db))
}

pub fn noise_std_from_reference(z0: &DVector<f64>, snr_db: f64) -> f64 {
    let power = z0.iter().map(|v| v * v).sum::<f64>() / z0.len() as f64;
    (power / 10f64.powf(snr_db / 10.0)).sqrt()
}

/// Draws a state `x ~ N(operating state, cov)`.
pub fn sample_state<R: Rng + ?Sized>(case: &GridCase, cov: &StateCovariance, rng: &mut R) -> AcState {
    let mut x = case.operating_state();
    for v in x.magnitudes.iter_mut() {
        *v += cov.magnitude_std * rng.sample::<f64, _>(StandardNormal);
    }
    for a in x.angles.iter_mut() {
        *a += cov.angle_std * rng.sample::<f64, _>(StandardNormal);
    }
    x
}

/// Adds i.i.d. `N(0, sigma^2)` noise in place.
pub fn add_noise<R: Rng + ?Sized>(z: &mut DVector<f64>, sigma: f64, rng: &mut R) {
    for v in z.iter_mut() {
        *v += sigma * rng.sample::<f64, _>(StandardNormal);
    }
}

/// A noisy AC measurement together with the state that produced it.
#[derive(Clone, Debug)]
pub struct Sample {
    pub state: AcState,
    pub measurement: DVector<f64>,
}

/// Draws `(x, h(x) + e)` pairs from one RNG stream.
pub struct MeasurementSampler<'a> {
    model: AcModel<'a>,
    cov: StateCovariance,
    sigma: f64,
}

impl<'a> MeasurementSampler<'a> {
    pub fn new(case: &'a GridCase, cov: StateCovariance, sigma: f64) -> Result<Self> {
        cov.validate()?;
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidArgument(format!("noise std {sigma} is invalid")));
        }
        Ok(MeasurementSampler {
            model: AcModel::new(case)?,
            cov,
            sigma,
        })
    }

    pub fn model(&self) -> &AcModel<'a> {
        &self.model
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Sample {
        let state = sample_state(self.model.case(), &self.cov, rng);
        let mut measurement = self
            .model
            .measure(&state)
            .expect("sampled state has case dimensions");
        add_noise(&mut measurement, self.sigma, rng);
        Sample { state, measurement }
    }
}

/// `count` measurement vectors `z_i = h(x_i) + e_i`, reproducible from `seed`.
pub fn sample_measurements(
    case: &GridCase,
    count: usize,
    cov: &StateCovariance,
    sigma: f64,
    seed: u64,
) -> Result<Vec<DVector<f64>>> {
    let sampler = MeasurementSampler::new(case, *cov, sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| sampler.draw(&mut rng).measurement).collect())
}
