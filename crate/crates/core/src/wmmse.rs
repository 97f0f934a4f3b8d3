//! Per-user rates, the WMMSE surrogate objective, the three closed-form
//! block-coordinate updates, and the classical solver built from them.
//!
//! Everything is generic over [`Real`], so the identical update code
//! serves the plain solver, the unfolded network and its differentiated
//! training path. Shapes per user i: transmit beamformer V_i is T×d,
//! receive beamformer U_i is R×d, weight W_i is d×d.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::csi::{CsiTensor, LiftedCsi};
use crate::error::Error;
use crate::mat::Mat;
use crate::model::beta_project;
use crate::real::Real;

/// Whether the covariance sums of the U- and V-updates include the i-th
/// term. [`InterferenceMode::IncludeSelf`] is the classical covariance,
/// under which the U- and W-updates are exact block minimizers of the
/// surrogate; [`InterferenceMode::ExcludeSelf`] sums interference only,
/// the form the unfolded network defaults to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InterferenceMode {
    ExcludeSelf,
    IncludeSelf,
}

impl InterferenceMode {
    pub fn label(self) -> &'static str {
        match self {
            Self::ExcludeSelf => "exclude_self",
            Self::IncludeSelf => "include_self",
        }
    }
}

impl core::fmt::Display for InterferenceMode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.label())
    }
}

impl core::str::FromStr for InterferenceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exclude_self" => Ok(Self::ExcludeSelf),
            "include_self" => Ok(Self::IncludeSelf),
            other => Err(Error::Config(format!(
                "unknown interference mode {other:?}, expected exclude_self or include_self"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProblemConfig {
    /// Data streams per user, d.
    pub streams: usize,
    /// Noise standard deviation (σ, not σ²).
    pub sigma: f64,
    /// Per-user transmit power budget.
    pub p_max: f64,
    pub interference_mode: InterferenceMode,
}

impl ProblemConfig {
    pub fn validate(&self, rx: usize, tx: usize) -> Result<(), Error> {
        if self.streams == 0 || self.streams > rx.min(tx) {
            return Err(Error::Config(format!(
                "streams d={} must satisfy 1 <= d <= min(R={rx}, T={tx})",
                self.streams
            )));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.p_max > 0.0) || !self.p_max.is_finite() {
            return Err(Error::Config(format!("p_max must be positive, got {}", self.p_max)));
        }
        Ok(())
    }
}

/// All three per-user beamformer collections after a solve.
#[derive(Clone, Debug)]
pub struct BeamformerSet {
    pub v: Vec<Mat<f64>>,
    pub u: Vec<Mat<f64>>,
    pub w: Vec<Mat<f64>>,
}

/// Per-iteration progress of [`wmmse_solve`]; vector lengths equal
/// `iterations`.
#[derive(Clone, Debug, Default)]
pub struct SolveTrace {
    pub sum_rates: Vec<f64>,
    pub objectives: Vec<f64>,
    pub iterations: usize,
}

fn check_beamformers<R: Real>(
    h: &LiftedCsi<R>,
    v: &[Mat<R>],
    cfg: &ProblemConfig,
) -> Result<(), Error> {
    cfg.validate(h.rx(), h.tx())?;
    if v.len() != h.users() {
        return Err(Error::Dim(format!(
            "{} beamformers for {} users",
            v.len(),
            h.users()
        )));
    }
    for (i, vi) in v.iter().enumerate() {
        if vi.rows() != h.tx() || vi.cols() != cfg.streams {
            return Err(Error::Dim(format!(
                "V_{i} is {}x{}, expected {}x{}",
                vi.rows(),
                vi.cols(),
                h.tx(),
                cfg.streams
            )));
        }
    }
    Ok(())
}

/// σ²I plus the transmit covariances seen at receiver i, summed over
/// `j != i`, optionally including the own-signal term `j == i`.
fn rx_covariance<R: Real>(
    h: &LiftedCsi<R>,
    v: &[Mat<R>],
    i: usize,
    include_self: bool,
    sigma: f64,
) -> Mat<R> {
    let mut c = Mat::zeros(h.rx(), h.rx()).add_diag(R::lit(sigma * sigma));
    for (j, vj) in v.iter().enumerate() {
        if j == i && !include_self {
            continue;
        }
        let hv = h.block(i, j).matmul(vj);
        c = c.add(&hv.matmul(&hv.t()));
    }
    c
}

/// Achievable rate of user i in bits:
/// log₂ det(I + H_ii V_i V_iᵀ H_iiᵀ Q_i⁻¹) with Q_i the
/// interference-plus-noise covariance, evaluated in the R×R form as
/// log det(Q_i + S Sᵀ) − log det(Q_i) with S = H_ii V_i.
pub fn user_rate<R: Real>(
    h: &LiftedCsi<R>,
    v: &[Mat<R>],
    i: usize,
    cfg: &ProblemConfig,
) -> Result<R, Error> {
    check_beamformers(h, v, cfg)?;
    let q = rx_covariance(h, v, i, false, cfg.sigma);
    let s = h.block(i, i).matmul(&v[i]);
    let full = q.add(&s.matmul(&s.t()));
    let num = full
        .logdet_spd()
        .ok_or_else(|| Error::Config(format!("signal-plus-noise covariance of user {i} not positive definite")))?;
    let den = q
        .logdet_spd()
        .ok_or_else(|| Error::Config(format!("noise covariance of user {i} not positive definite")))?;
    Ok((num - den) * R::lit(1.0 / core::f64::consts::LN_2))
}

/// Same rate through the d×d determinant identity
/// log₂ det(I_d + Sᵀ Q⁻¹ S); kept as an independent cross-check of
/// [`user_rate`].
pub fn user_rate_compact<R: Real>(
    h: &LiftedCsi<R>,
    v: &[Mat<R>],
    i: usize,
    cfg: &ProblemConfig,
) -> Result<R, Error> {
    check_beamformers(h, v, cfg)?;
    let q = rx_covariance(h, v, i, false, cfg.sigma);
    let s = h.block(i, i).matmul(&v[i]);
    let x = q
        .solve(&s)
        .ok_or_else(|| Error::Config(format!("noise covariance of user {i} singular")))?;
    let g = s.t().matmul(&x).add_diag(R::lit(1.0));
    let ld = g
        .logdet_spd()
        .ok_or_else(|| Error::Config(format!("rate determinant of user {i} not positive definite")))?;
    Ok(ld * R::lit(1.0 / core::f64::consts::LN_2))
}

pub fn sum_rate<R: Real>(h: &LiftedCsi<R>, v: &[Mat<R>], cfg: &ProblemConfig) -> Result<R, Error> {
    let mut acc = R::lit(0.0);
    for i in 0..h.users() {
        acc = acc + user_rate(h, v, i, cfg)?;
    }
    Ok(acc)
}

/// Receive-beamformer update: U_i = (C_i + σ²I)⁻¹ H_ii V_i, where C_i
/// sums H_ij V_j V_jᵀ H_ijᵀ over the mode's j range.
pub fn update_u<R: Real>(
    h: &LiftedCsi<R>,
    v: &[Mat<R>],
    cfg: &ProblemConfig,
) -> Result<Vec<Mat<R>>, Error> {
    check_beamformers(h, v, cfg)?;
    let include_self = cfg.interference_mode == InterferenceMode::IncludeSelf;
    (0..h.users())
        .map(|i| {
            let c = rx_covariance(h, v, i, include_self, cfg.sigma);
            let rhs = h.block(i, i).matmul(&v[i]);
            c.solve(&rhs).ok_or_else(|| {
                Error::Config(format!("receive covariance of user {i} singular despite sigma > 0"))
            })
        })
        .collect()
}

/// Weight update: W_i = a_i (I − U_iᵀ H_ii V_i)⁻¹ + b_i I. The classical
/// algorithm uses a_i = 1, b_i = 0; the unfolded network feeds learned
/// per-user scalars.
pub fn update_w<R: Real>(
    h: &LiftedCsi<R>,
    v: &[Mat<R>],
    u: &[Mat<R>],
    a: &[R],
    b: &[R],
) -> Result<Vec<Mat<R>>, Error> {
    let m = h.users();
    if v.len() != m || u.len() != m || a.len() != m || b.len() != m {
        return Err(Error::Dim(format!(
            "update_w needs {m} users, got v={}, u={}, a={}, b={}",
            v.len(),
            u.len(),
            a.len(),
            b.len()
        )));
    }
    (0..m)
        .map(|i| {
            let g = Mat::identity(u[i].cols())
                .sub(&u[i].t().matmul(h.block(i, i)).matmul(&v[i]));
            let inv = g.inverse().ok_or(Error::SingularWeight { user: i })?;
            Ok(inv.scale(a[i]).add_diag(b[i]))
        })
        .collect()
}

/// Transmit-beamformer update:
/// V_i = β((A_i + λI)⁻¹ H_iiᵀ U_i W_i) with
/// A_i = Σ_j H_jiᵀ U_j W_j U_jᵀ H_ji over the mode's j range (H_ji is
/// the channel out of transmitter i into receiver j). The Tikhonov term
/// λ = 1e-12·(1 + tr A_i / max(1, T·d)) keeps the solve well-posed even
/// when the sum is empty (single user in exclude-self mode); β is the
/// power projection.
pub fn update_v<R: Real>(
    h: &LiftedCsi<R>,
    u: &[Mat<R>],
    w: &[Mat<R>],
    cfg: &ProblemConfig,
) -> Result<Vec<Mat<R>>, Error> {
    let m = h.users();
    if u.len() != m || w.len() != m {
        return Err(Error::Dim(format!(
            "update_v needs {m} users, got u={}, w={}",
            u.len(),
            w.len()
        )));
    }
    let include_self = cfg.interference_mode == InterferenceMode::IncludeSelf;
    let norm = 1usize.max(h.tx() * cfg.streams) as f64;
    (0..m)
        .map(|i| {
            let mut a = Mat::zeros(h.tx(), h.tx());
            for j in 0..m {
                if j == i && !include_self {
                    continue;
                }
                let hu = h.block(j, i).t().matmul(&u[j]);
                a = a.add(&hu.matmul(&w[j]).matmul(&hu.t()));
            }
            let lambda = R::lit(1e-12) * (R::lit(1.0) + a.trace() * R::lit(1.0 / norm));
            let b = h.block(i, i).t().matmul(&u[i]).matmul(&w[i]);
            let vi = a.add_diag(lambda).solve(&b).ok_or_else(|| {
                Error::Config(format!("transmit update of user {i} singular despite regularization"))
            })?;
            Ok(beta_project(&vi, cfg.p_max))
        })
        .collect()
}

/// One full block-coordinate sweep (U, then W with the given per-user
/// scalars, then V).
pub fn sweep<R: Real>(
    h: &LiftedCsi<R>,
    v: &[Mat<R>],
    a: &[R],
    b: &[R],
    cfg: &ProblemConfig,
) -> Result<(Vec<Mat<R>>, Vec<Mat<R>>, Vec<Mat<R>>), Error> {
    let u = update_u(h, v, cfg)?;
    let w = update_w(h, v, &u, a, b)?;
    let v_next = update_v(h, &u, &w, cfg)?;
    Ok((u, w, v_next))
}

/// Linear-receiver mean-square-error matrix of user i:
/// (I − U_iᵀH_iiV_i)(I − U_iᵀH_iiV_i)ᵀ + U_iᵀ(σ²I + Σ_{j≠i} H_ijV_jV_jᵀH_ijᵀ)U_i.
pub fn mse_matrix<R: Real>(
    h: &LiftedCsi<R>,
    v: &[Mat<R>],
    u: &[Mat<R>],
    i: usize,
    sigma: f64,
) -> Mat<R> {
    let g = Mat::identity(u[i].cols()).sub(&u[i].t().matmul(h.block(i, i)).matmul(&v[i]));
    let q = rx_covariance(h, v, i, false, sigma);
    g.matmul(&g.t()).add(&u[i].t().matmul(&q).matmul(&u[i]))
}

/// Surrogate objective Σ_i [Tr(W_i E_i) − log det W_i]; the quantity the
/// block-coordinate sweep descends in classical mode.
pub fn wmmse_objective<R: Real>(
    h: &LiftedCsi<R>,
    v: &[Mat<R>],
    u: &[Mat<R>],
    w: &[Mat<R>],
    cfg: &ProblemConfig,
) -> Result<R, Error> {
    check_beamformers(h, v, cfg)?;
    let mut acc = R::lit(0.0);
    for i in 0..h.users() {
        let e = mse_matrix(h, v, u, i, cfg.sigma);
        let ld = w[i].logdet_lu().ok_or(Error::NotPositiveDefinite { user: i })?;
        acc = acc + w[i].matmul(&e).trace() - ld;
    }
    Ok(acc)
}

/// The shared starting point √P_max · 1_{T×d}. Deliberately exceeds the
/// power budget when T·d > 1; the first V-update projects back inside.
pub fn initial_v<R: Real>(users: usize, tx: usize, streams: usize, p_max: f64) -> Vec<Mat<R>> {
    let fill = R::lit(p_max.sqrt());
    (0..users).map(|_| Mat::filled(tx, streams, fill)).collect()
}

/// Classical WMMSE solver: repeated sweeps with a = 1, b = 0, always in
/// [`InterferenceMode::IncludeSelf`] regardless of the configured mode
/// (the configurable mode belongs to the unfolded path). Stops after
/// `max_iters` sweeps or, for `tol > 0`, once the sum-rate's relative
/// change drops to `tol`. The trace records sum-rate and surrogate
/// objective after every sweep.
pub fn wmmse_solve(
    h: &CsiTensor,
    cfg: &ProblemConfig,
    max_iters: usize,
    tol: f64,
) -> Result<(BeamformerSet, SolveTrace), Error> {
    if max_iters == 0 {
        return Err(Error::Config("wmmse_solve needs max_iters >= 1".into()));
    }
    let cfg = ProblemConfig { interference_mode: InterferenceMode::IncludeSelf, ..*cfg };
    cfg.validate(h.rx(), h.tx())?;
    let hl: LiftedCsi<f64> = h.lift();
    let m = h.users();
    let ones = vec![1.0; m];
    let zeros = vec![0.0; m];
    let mut v = initial_v(m, h.tx(), cfg.streams, cfg.p_max);
    let mut trace = SolveTrace::default();
    let mut u = Vec::new();
    let mut w = Vec::new();

    for _ in 0..max_iters {
        let (nu, nw, nv) = sweep(&hl, &v, &ones, &zeros, &cfg)?;
        u = nu;
        w = nw;
        v = nv;
        let rate = sum_rate(&hl, &v, &cfg)?;
        let obj = wmmse_objective(&hl, &v, &u, &w, &cfg)?;
        let prev = trace.sum_rates.last().copied();
        trace.sum_rates.push(rate);
        trace.objectives.push(obj);
        trace.iterations += 1;
        if let Some(p) = prev {
            if tol > 0.0 && (rate - p).abs() <= tol * p.abs().max(1.0) {
                break;
            }
        }
    }
    Ok((BeamformerSet { v, u, w }, trace))
}

/// Same iteration as [`wmmse_solve`] but without the trace, and without
/// any rate computation when `tol == 0`; this is the path to time.
/// Returns the final V and the number of sweeps executed.
pub fn wmmse_allocate(
    h: &CsiTensor,
    cfg: &ProblemConfig,
    max_iters: usize,
    tol: f64,
) -> Result<(Vec<Mat<f64>>, usize), Error> {
    if max_iters == 0 {
        return Err(Error::Config("wmmse_allocate needs max_iters >= 1".into()));
    }
    let cfg = ProblemConfig { interference_mode: InterferenceMode::IncludeSelf, ..*cfg };
    cfg.validate(h.rx(), h.tx())?;
    let hl: LiftedCsi<f64> = h.lift();
    let m = h.users();
    let ones = vec![1.0; m];
    let zeros = vec![0.0; m];
    let mut v = initial_v(m, h.tx(), cfg.streams, cfg.p_max);
    let mut iters = 0;
    let mut prev_rate: Option<f64> = None;

    for _ in 0..max_iters {
        let (_, _, nv) = sweep(&hl, &v, &ones, &zeros, &cfg)?;
        v = nv;
        iters += 1;
        if tol > 0.0 {
            let rate = sum_rate(&hl, &v, &cfg)?;
            if let Some(p) = prev_rate {
                if (rate - p).abs() <= tol * p.abs().max(1.0) {
                    break;
                }
            }
            prev_rate = Some(rate);
        }
    }
    Ok((v, iters))
}
