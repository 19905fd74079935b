//! Geo-Indistinguishability baseline: independent planar Laplace noise on
//! every record.

use std::f64::consts::{E, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::geo::{LocalPlane, PlanarPoint};
use crate::lambert::lambert_w_m1;
use crate::model::{Dataset, Fix, Trace};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoIndConfig {
    /// Privacy parameter per meter; smaller means more noise.
    pub epsilon: f64,
    pub seed: u64,
}

impl GeoIndConfig {
    pub fn new(epsilon: f64, seed: u64) -> Result<Self, ConfigError> {
        ConfigError::check(
            epsilon.is_finite() && epsilon > 0.0,
            "epsilon",
            "positive (per meter)",
            epsilon,
        )?;
        Ok(Self { epsilon, seed })
    }
}

/// Parses a decimal or the `ln(K)/L` notation (e.g. `ln(4)/200`).
pub fn parse_epsilon(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let bad = || format!("invalid epsilon `{s}`; expected a number or ln(K)/L");
    let value = if let Some(rest) = s.strip_prefix("ln(") {
        let (k, tail) = rest.split_once(')').ok_or_else(bad)?;
        let k: f64 = k.trim().parse().map_err(|_| bad())?;
        let l: f64 = match tail.trim() {
            "" => 1.0,
            t => t
                .strip_prefix('/')
                .ok_or_else(bad)?
                .trim()
                .parse()
                .map_err(|_| bad())?,
        };
        k.ln() / l
    } else {
        s.parse().map_err(|_| bad())?
    };
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(format!("epsilon `{s}` must evaluate to a positive number"))
    }
}

/// Radius whose planar-Laplace CDF equals `p`, for `p` in `[0, 1)`.
pub fn planar_laplace_radius(epsilon: f64, p: f64) -> f64 {
    -(lambert_w_m1((p - 1.0) / E) + 1.0) / epsilon
}

/// CDF of the planar-Laplace radius: `1 - (1 + εr)·e^(-εr)`.
pub fn planar_laplace_cdf(epsilon: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let er = epsilon * r;
    1.0 - (1.0 + er) * (-er).exp()
}

/// Draws `(angle, radius)`: angle uniform in `[0, 2π)`, radius by inverse
/// CDF sampling.
pub fn sample_planar_laplace<R: Rng + ?Sized>(epsilon: f64, rng: &mut R) -> (f64, f64) {
    let theta = rng.gen_range(0.0..TAU);
    let p: f64 = rng.gen();
    (theta, planar_laplace_radius(epsilon, p))
}

fn perturb_trace(trace: &Trace, cfg: &GeoIndConfig) -> Trace {
    let user = trace.user().as_str().as_bytes();
    let mut key = Vec::with_capacity(user.len() + 8);
    let fixes = trace
        .fixes()
        .iter()
        .enumerate()
        .map(|(i, f)| {
            key.clear();
            key.extend_from_slice(&(i as u64).to_le_bytes());
            key.extend_from_slice(user);
            let mut rng = rng::substream(cfg.seed, "geoind", &key);
            let (theta, r) = sample_planar_laplace(cfg.epsilon, &mut rng);
            let plane = LocalPlane::new(f.loc);
            let loc = plane.unproject(&PlanarPoint::new(r * theta.cos(), r * theta.sin()));
            Fix::new(loc, f.time)
        })
        .collect();
    Trace::new(trace.user().clone(), fixes).expect("timestamps unchanged")
}

/// Perturbs every record. User ids, timestamps and record counts are left
/// untouched; noise for record `i` of user `u` depends only on
/// `(seed, u, i)`.
pub fn geoind(d: &Dataset, cfg: &GeoIndConfig) -> Dataset {
    d.par_map_traces(|t| Some(perturb_trace(t, cfg)))
}
