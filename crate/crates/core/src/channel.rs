//! Channel generation: a line-of-sight BS–IRS link built from the array
//! geometry and Rayleigh-faded BS–user and IRS–user links whose variances
//! follow a log-distance path-loss law.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::{MuPlacement, Point3, ScenarioConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub bs_position: Point3,
    pub irs_position: Point3,
    pub mu_positions: Vec<Point3>,
    pub antenna_spacing_bs: f64,
    pub antenna_spacing_irs: f64,
}

/// Path gains (squared amplitudes) of every link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudget {
    pub beta_h_sq: f64,
    pub beta_r_sq: Vec<f64>,
    pub beta_b_sq: Vec<f64>,
}

/// One channel draw.
///
/// `h_irs_mu[i]` and `h_bs_mu[i]` are the column vectors `h_{r,i}` and
/// `h_{b,i}`; user `i` sees the row channel `h_{r,i}ᴴ Φ H + h_{b,i}ᴴ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h_bs_irs: DMatrix<Complex64>,
    pub h_irs_mu: Vec<DVector<Complex64>>,
    pub h_bs_mu: Vec<DVector<Complex64>>,
    pub budget: LinkBudget,
}

impl ChannelRealization {
    pub fn m(&self) -> usize {
        self.h_bs_irs.ncols()
    }

    pub fn n(&self) -> usize {
        self.h_bs_irs.nrows()
    }

    pub fn k(&self) -> usize {
        self.h_bs_mu.len()
    }
}

/// Departure/arrival angles of the BS–IRS line of sight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LosAngles {
    pub theta_bs: f64,
    pub phi_bs: f64,
    pub theta_irs: f64,
    pub phi_irs: f64,
}

fn distance(a: &Point3, b: &Point3) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        let d = |a: &Point3, b: &Point3| distance(a, b);
        if d(&self.bs_position, &self.irs_position) <= 0.0 {
            return Err(Error::InvalidConfig("BS and IRS coincide".into()));
        }
        for (i, mu) in self.mu_positions.iter().enumerate() {
            if d(mu, &self.bs_position) <= 0.0 || d(mu, &self.irs_position) <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "user {i} coincides with BS or IRS"
                )));
            }
        }
        Ok(())
    }

    pub fn bs_irs_distance(&self) -> f64 {
        distance(&self.bs_position, &self.irs_position)
    }

    /// Angles via two-argument arctangent, which stays finite when the BS
    /// and IRS share a height or an x coordinate.
    pub fn los_angles(&self) -> LosAngles {
        let [xb, yb, zb] = self.bs_position;
        let [xi, yi, zi] = self.irs_position;
        let theta_bs = self.bs_irs_distance().atan2(zi - zb);
        let phi_bs = PI - (yi - yb).atan2(xi - xb);
        LosAngles {
            theta_bs,
            phi_bs,
            theta_irs: PI - theta_bs,
            phi_irs: PI + phi_bs,
        }
    }
}

fn steering(len: usize, spacing: f64, phi: f64, theta: f64) -> Vec<Complex64> {
    let k = 2.0 * PI * spacing * phi.sin() * theta.sin();
    (0..len)
        .map(|i| Complex64::from_polar(1.0, k * i as f64))
        .collect()
}

/// Rank-one LoS channel `√(β_h²/2) · g sᵀ` of shape `n × m`, where `s` is
/// the BS steering vector and `g` the IRS one.
pub fn los_bs_irs_channel(
    geom: &Geometry,
    m: usize,
    n: usize,
    beta_h_sq: f64,
) -> DMatrix<Complex64> {
    let ang = geom.los_angles();
    let s = steering(m, geom.antenna_spacing_bs, ang.phi_bs, ang.theta_bs);
    let g = steering(n, geom.antenna_spacing_irs, ang.phi_irs, ang.theta_irs);
    let amp = (beta_h_sq / 2.0).sqrt();
    DMatrix::from_fn(n, m, |r, c| g[r] * s[c] * amp)
}

/// i.i.d. `CN(0, variance)` entries.
pub fn rayleigh_vector<R: Rng + ?Sized>(
    dim: usize,
    variance: f64,
    rng: &mut R,
) -> DVector<Complex64> {
    let sd = (variance / 2.0).sqrt();
    DVector::from_fn(dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(sd * re, sd * im)
    })
}

/// `d0_gain · (distance / c0)^(−α)`.
pub fn path_loss(distance_m: f64, alpha: f64, c0_m: f64, d0_gain: f64) -> f64 {
    d0_gain * (distance_m / c0_m).powf(-alpha)
}

/// Horizontal unit vector from `center` toward `facing`, or `−y` when the
/// two points are vertically aligned.
fn facing_direction(center: &Point3, facing: &Point3) -> [f64; 2] {
    let (dx, dy) = (facing[0] - center[0], facing[1] - center[1]);
    let norm = dx.hypot(dy);
    if norm > 0.0 {
        [dx / norm, dy / norm]
    } else {
        [0.0, -1.0]
    }
}

fn half_circle_point(center: &Point3, radius: f64, facing: &Point3, angle: f64) -> Point3 {
    let u = facing_direction(center, facing);
    let v = [-u[1], u[0]];
    let (c, s) = (angle.cos(), angle.sin());
    [
        center[0] + radius * (c * v[0] + s * u[0]),
        center[1] + radius * (c * v[1] + s * u[1]),
        center[2],
    ]
}

/// `k` users at angles `π(i − ½)/k` on the horizontal half circle of the
/// given radius around `center`, on the side facing `facing`. Angle `π/2`
/// points straight at `facing`.
pub fn place_mus_half_circle(
    k: usize,
    center: &Point3,
    radius: f64,
    facing: &Point3,
) -> Vec<Point3> {
    (1..=k)
        .map(|i| {
            let angle = PI * (i as f64 - 0.5) / k as f64;
            half_circle_point(center, radius, facing, angle)
        })
        .collect()
}

/// Like [`place_mus_half_circle`] with independent uniform angles in `[0, π)`.
pub fn place_mus_random<R: Rng + ?Sized>(
    k: usize,
    center: &Point3,
    radius: f64,
    facing: &Point3,
    rng: &mut R,
) -> Vec<Point3> {
    (0..k)
        .map(|_| half_circle_point(center, radius, facing, rng.gen_range(0.0..PI)))
        .collect()
}

pub fn geometry_for<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Geometry {
    let mu_positions = match config.mu_placement {
        MuPlacement::Even => place_mus_half_circle(
            config.k_users,
            &config.irs_position,
            config.mu_radius,
            &config.bs_position,
        ),
        MuPlacement::Random => place_mus_random(
            config.k_users,
            &config.irs_position,
            config.mu_radius,
            &config.bs_position,
            rng,
        ),
    };
    Geometry {
        bs_position: config.bs_position,
        irs_position: config.irs_position,
        mu_positions,
        antenna_spacing_bs: config.antenna_spacing_bs,
        antenna_spacing_irs: config.antenna_spacing_irs,
    }
}

pub fn link_budget(config: &ScenarioConfig, geom: &Geometry) -> LinkBudget {
    let pl = |d: f64, alpha: f64| path_loss(d, alpha, config.ref_distance_m, config.ref_gain());
    LinkBudget {
        beta_h_sq: pl(geom.bs_irs_distance(), config.alpha_bs_irs),
        beta_r_sq: geom
            .mu_positions
            .iter()
            .map(|p| pl(distance(p, &geom.irs_position), config.alpha_irs_mu))
            .collect(),
        beta_b_sq: geom
            .mu_positions
            .iter()
            .map(|p| pl(distance(p, &geom.bs_position), config.alpha_bs_mu))
            .collect(),
    }
}

/// Draws one realization. With random placement the user angles come from
/// `rng` first; then, per user, `h_{r,i}` followed by `h_{b,i}`.
pub fn draw_realization<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    rng: &mut R,
) -> ChannelRealization {
    let geom = geometry_for(config, rng);
    let budget = link_budget(config, &geom);
    let (m, n) = (config.m_antennas, config.n_irs_units);
    let h_bs_irs = los_bs_irs_channel(&geom, m, n, budget.beta_h_sq);
    let mut h_irs_mu = Vec::with_capacity(config.k_users);
    let mut h_bs_mu = Vec::with_capacity(config.k_users);
    for i in 0..config.k_users {
        h_irs_mu.push(rayleigh_vector(n, budget.beta_r_sq[i], rng));
        h_bs_mu.push(rayleigh_vector(m, budget.beta_b_sq[i], rng));
    }
    ChannelRealization {
        h_bs_irs,
        h_irs_mu,
        h_bs_mu,
        budget,
    }
}
