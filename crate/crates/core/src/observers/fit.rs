//! Zero-intercept linear SVM in the `(v_w, phi_bar_w)` plane.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::classify_neighborhood;
use crate::error::{Error, Result};
use crate::Group;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub v_w: f64,
    pub phi_w: f64,
    pub group: Group,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Weight of the `|w|^2 / 2` penalty.
    pub lambda: f64,
    /// Larger sample sets are thinned to this many points first.
    pub max_samples: usize,
    /// Seed of the thinning draw.
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            lambda: 1e-3,
            max_samples: 100_000,
            seed: 0,
        }
    }
}

/// Fitted boundary `w_v v + w_phi phi = 0`; Group 1 lies on the positive side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub weight_v: f64,
    pub weight_phi: f64,
    /// Slope of the boundary `v = mu_hat * phi`.
    pub mu_hat: f64,
    /// Fraction of training samples on the wrong side.
    pub training_error: f64,
}

impl LinearFit {
    pub fn predict(&self, v_w: f64, phi_w: f64) -> Group {
        if self.weight_v > 0.0 {
            classify_neighborhood(v_w, phi_w, self.mu_hat)
        } else if self.weight_v * v_w + self.weight_phi * phi_w >= 0.0 {
            Group::One
        } else {
            Group::Two
        }
    }
}

/// Angles tried before refining; the profile over the angle has a single
/// basin, so the grid only has to land in it.
const ANGLE_GRID: usize = 72;
const ANGLE_TOL: f64 = 1e-9;

/// Projected margins `y (u . x)` of every sample for the unit direction `u`.
struct Ray<'a> {
    xs: &'a [(f64, f64, f64)],
    lambda: f64,
    margins: Vec<f64>,
}

impl Ray<'_> {
    /// Minimum over `r >= 0` of the objective along direction `theta`.
    ///
    /// Along a ray the objective is `lambda r^2 / 2 + mean(max(0, 1 - r a_i))`,
    /// whose derivative is piecewise constant plus `lambda r`; the root is
    /// found by sweeping the hinge breakpoints `1 / a_i` in order.
    fn solve(&mut self, theta: f64) -> (f64, f64) {
        let (c, s) = (theta.cos(), theta.sin());
        let n = self.xs.len() as f64;
        self.margins.clear();
        // sum of a_i over samples still inside the hinge
        let mut active = 0.0;
        for &(v, p, y) in self.xs {
            let a = y * (c * v + s * p);
            active += a;
            if a > 0.0 {
                self.margins.push(a);
            }
        }
        // descending margin = ascending breakpoint 1/a
        self.margins.sort_unstable_by(|a, b| b.total_cmp(a));
        let mut r = 0.0;
        let mut k = 0;
        loop {
            // stationary point with the current active set
            let candidate = (active / n / self.lambda).max(0.0);
            let next_break = self.margins.get(k).map_or(f64::INFINITY, |&a| 1.0 / a);
            if candidate <= next_break {
                r = candidate.max(r);
                break;
            }
            // passing the breakpoint drops sample k from the hinge
            r = next_break;
            active -= self.margins[k];
            k += 1;
        }
        (self.objective(c, s, r), r)
    }

    fn objective(&self, c: f64, s: f64, r: f64) -> f64 {
        let hinge: f64 = self
            .xs
            .iter()
            .map(|&(v, p, y)| (1.0 - r * y * (c * v + s * p)).max(0.0))
            .sum();
        0.5 * self.lambda * r * r + hinge / self.xs.len() as f64
    }
}

/// Minimizes `lambda/2 |w|^2 + mean(max(0, 1 - y w.x))` over boundaries
/// through the origin, with `y = +1` for Group 1.
///
/// The problem is two-dimensional and convex, so it is solved directly: for
/// each direction the best length is exact, and the direction is located by
/// a coarse scan followed by golden-section refinement.
pub fn fit_linear_classifier(samples: &[LabeledSample], config: &FitConfig) -> Result<LinearFit> {
    let has = |g| samples.iter().any(|s| s.group == g);
    if !has(Group::One) || !has(Group::Two) {
        return Err(Error::Fit("samples must contain both groups".into()));
    }
    if !(config.lambda > 0.0) || config.max_samples == 0 {
        return Err(Error::Fit("invalid fit configuration".into()));
    }
    if samples.iter().any(|s| !s.v_w.is_finite() || !s.phi_w.is_finite()) {
        return Err(Error::Fit("non-finite sample".into()));
    }
    let thinned: Vec<LabeledSample>;
    let train = if samples.len() > config.max_samples {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        thinned = rand::seq::index::sample(&mut rng, samples.len(), config.max_samples)
            .into_iter()
            .map(|i| samples[i])
            .collect();
        &thinned[..]
    } else {
        samples
    };

    let xs: Vec<(f64, f64, f64)> = train.iter().map(|s| (s.v_w, s.phi_w, s.group.direction())).collect();
    let mut ray = Ray {
        xs: &xs,
        lambda: config.lambda,
        margins: Vec::with_capacity(xs.len()),
    };

    let step = std::f64::consts::TAU / ANGLE_GRID as f64;
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..ANGLE_GRID {
        let theta = k as f64 * step;
        let (j, _) = ray.solve(theta);
        if j < best.0 {
            best = (j, theta);
        }
    }
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (best.1 - step, best.1 + step);
    let mut x1 = hi - golden * (hi - lo);
    let mut x2 = lo + golden * (hi - lo);
    let (mut f1, mut f2) = (ray.solve(x1).0, ray.solve(x2).0);
    while hi - lo > ANGLE_TOL {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - golden * (hi - lo);
            f1 = ray.solve(x1).0;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + golden * (hi - lo);
            f2 = ray.solve(x2).0;
        }
    }
    let theta = 0.5 * (lo + hi);
    let (j, r) = ray.solve(theta);
    let (theta, r) = if j < best.0 { (theta, r) } else { (best.1, ray.solve(best.1).1) };
    if r == 0.0 {
        return Err(Error::Fit("no boundary improves on the zero classifier".into()));
    }
    let (weight_v, weight_phi) = (r * theta.cos(), r * theta.sin());
    let mu_hat = if weight_v != 0.0 { -weight_phi / weight_v } else { f64::INFINITY };
    let mut fit = LinearFit {
        weight_v,
        weight_phi,
        mu_hat,
        training_error: 0.0,
    };
    let wrong = samples
        .iter()
        .filter(|s| fit.predict(s.v_w, s.phi_w) != s.group)
        .count();
    fit.training_error = wrong as f64 / samples.len() as f64;
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn sample(v_w: f64, phi_w: f64, group: Group) -> LabeledSample {
        LabeledSample { v_w, phi_w, group }
    }

    #[test]
    fn symmetric_toy_set() {
        let s = [sample(1.0, 0.0, Group::One), sample(-1.0, 0.0, Group::Two)];
        let fit = fit_linear_classifier(&s, &FitConfig::default()).unwrap();
        assert_eq!(fit.training_error, 0.0);
        assert!(fit.mu_hat.abs() < 1e-9);
        assert!(fit.weight_v > 0.0);
    }

    #[test]
    fn single_class_is_error() {
        let s = [sample(1.0, 0.0, Group::One), sample(2.0, 1.0, Group::One)];
        assert!(matches!(fit_linear_classifier(&s, &FitConfig::default()), Err(Error::Fit(_))));
        assert!(fit_linear_classifier(&[], &FitConfig::default()).is_err());
    }

    #[test]
    fn deterministic_for_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s: Vec<_> = (0..10_000)
            .map(|_| {
                let (v, p): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                sample(v, p, if v + 0.1 * rng.gen::<f64>() - 0.3 * p >= 0.0 { Group::One } else { Group::Two })
            })
            .collect();
        let cfg = FitConfig { max_samples: 2000, ..FitConfig::default() };
        assert_eq!(fit_linear_classifier(&s, &cfg).unwrap(), fit_linear_classifier(&s, &cfg).unwrap());
    }
}
