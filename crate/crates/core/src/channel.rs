//! Random channel realizations for the three distribution families.
//!
//! All families produce real magnitudes of complex draws, so every entry
//! is nonnegative and the same real-valued solver consumes all of them.
//! Generation is reproducible: the RNG is ChaCha8 keyed by the spec seed,
//! and each sample runs on its own counter stream (stream = sample
//! index), so sample s of a size-n batch is identical for every n and
//! samples can be generated independently or in parallel.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

// Inherent f64 methods cover these under std; the trait provides them
// for no_std builds.
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::csi::CsiTensor;
use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ChannelFamily {
    Rayleigh,
    Rician,
    Geometric,
}

impl ChannelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ChannelFamily::Rayleigh => "rayleigh",
            ChannelFamily::Rician => "rician",
            ChannelFamily::Geometric => "geometric",
        }
    }
}

impl fmt::Display for ChannelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChannelFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "rayleigh" => Ok(ChannelFamily::Rayleigh),
            "rician" => Ok(ChannelFamily::Rician),
            "geometric" => Ok(ChannelFamily::Geometric),
            other => Err(Error::Config(format!(
                "unknown channel family '{other}' (expected rayleigh, rician or geometric)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelSpec {
    pub family: ChannelFamily,
    /// Number of transmitter-receiver pairs M.
    pub users: usize,
    /// Transmit antennas per user T.
    pub tx: usize,
    /// Receive antennas per user R.
    pub rx: usize,
    /// Rician K-factor in dB; ignored by the other families.
    pub rician_k_db: f64,
    pub seed: u64,
}

impl ChannelSpec {
    pub fn validate(&self) -> Result<(), Error> {
        if self.users == 0 || self.tx == 0 || self.rx == 0 {
            return Err(Error::Config(format!(
                "channel spec needs positive dims, got M={}, T={}, R={}",
                self.users, self.tx, self.rx
            )));
        }
        if self.family == ChannelFamily::Rician && !self.rician_k_db.is_finite() {
            return Err(Error::Config(format!(
                "Rician K-factor must be finite, got {} dB",
                self.rician_k_db
            )));
        }
        Ok(())
    }
}

/// Transmitter and receiver positions of one Geometric sample, with the
/// pairwise distances; `distance(i, j)` is from transmitter j to
/// receiver i.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometricLayout {
    users: usize,
    pub tx_positions: Vec<[f64; 2]>,
    pub rx_positions: Vec<[f64; 2]>,
    distances: Vec<f64>,
}

impl GeometricLayout {
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.distances[i * self.users + j]
    }
}

/// Distance attenuation `1 / (1 + d²)`.
pub fn path_loss(d: f64) -> f64 {
    1.0 / (1.0 + d * d)
}

fn sample_rng(seed: u64, sample: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample as u64);
    rng
}

/// Magnitude of (x + iy)/√2 with x, y standard normal: unit mean square.
fn rayleigh_mag(rng: &mut ChaCha8Rng) -> f64 {
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    ((x * x + y * y) * 0.5).sqrt()
}

fn rician_mag(rng: &mut ChaCha8Rng, k_db: f64) -> f64 {
    let k = 10f64.powf(k_db / 10.0);
    let los = (k / (k + 1.0)).sqrt();
    let scatter = (1.0 / (k + 1.0)).sqrt();
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    let re = los + scatter * x * core::f64::consts::FRAC_1_SQRT_2;
    let im = scatter * y * core::f64::consts::FRAC_1_SQRT_2;
    (re * re + im * im).sqrt()
}

/// Dispatches to the generator for `spec.family`, discarding Geometric
/// layouts.
pub fn generate(spec: &ChannelSpec, n: usize) -> Result<Vec<CsiTensor>, Error> {
    match spec.family {
        ChannelFamily::Rayleigh => generate_rayleigh(spec, n),
        ChannelFamily::Rician => generate_rician(spec, n),
        ChannelFamily::Geometric => Ok(generate_geometric(spec, n)?.0),
    }
}

pub fn generate_rayleigh(spec: &ChannelSpec, n: usize) -> Result<Vec<CsiTensor>, Error> {
    spec.validate()?;
    (0..n)
        .map(|s| {
            let mut rng = sample_rng(spec.seed, s);
            CsiTensor::from_fn(spec.users, spec.rx, spec.tx, |_, _, _, _| {
                rayleigh_mag(&mut rng)
            })
        })
        .collect()
}

pub fn generate_rician(spec: &ChannelSpec, n: usize) -> Result<Vec<CsiTensor>, Error> {
    spec.validate()?;
    if !spec.rician_k_db.is_finite() {
        return Err(Error::Config(format!(
            "Rician K-factor must be finite, got {} dB",
            spec.rician_k_db
        )));
    }
    (0..n)
        .map(|s| {
            let mut rng = sample_rng(spec.seed, s);
            CsiTensor::from_fn(spec.users, spec.rx, spec.tx, |_, _, _, _| {
                rician_mag(&mut rng, spec.rician_k_db)
            })
        })
        .collect()
}

/// Per sample: drops transmitters then receivers uniformly in
/// [−√M, √M]², then draws Rayleigh fading scaled by the pathloss of the
/// transmitter-receiver distance. The layout is resampled for every
/// realization.
pub fn generate_geometric(
    spec: &ChannelSpec,
    n: usize,
) -> Result<(Vec<CsiTensor>, Vec<GeometricLayout>), Error> {
    spec.validate()?;
    let m = spec.users;
    let side = (m as f64).sqrt();
    let mut tensors = Vec::with_capacity(n);
    let mut layouts = Vec::with_capacity(n);
    for s in 0..n {
        let mut rng = sample_rng(spec.seed, s);
        let point = |rng: &mut ChaCha8Rng| {
            [rng.gen_range(-side..=side), rng.gen_range(-side..=side)]
        };
        let tx_positions: Vec<[f64; 2]> = (0..m).map(|_| point(&mut rng)).collect();
        let rx_positions: Vec<[f64; 2]> = (0..m).map(|_| point(&mut rng)).collect();
        let distances: Vec<f64> = (0..m * m)
            .map(|k| {
                let (i, j) = (k / m, k % m);
                let dx = tx_positions[j][0] - rx_positions[i][0];
                let dy = tx_positions[j][1] - rx_positions[i][1];
                (dx * dx + dy * dy).sqrt()
            })
            .collect();
        let layout = GeometricLayout { users: m, tx_positions, rx_positions, distances };
        tensors.push(CsiTensor::from_fn(m, spec.rx, spec.tx, |i, j, _, _| {
            path_loss(layout.distance(i, j)) * rayleigh_mag(&mut rng)
        })?);
        layouts.push(layout);
    }
    Ok((tensors, layouts))
}
