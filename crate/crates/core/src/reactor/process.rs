use rand::Rng;
use rand_distr::StandardNormal;

use super::species::{N_SPECIES, OLEFINE, OXYGEN};
use crate::error::{Error, Result};

pub const ZERO_CELSIUS: f64 = 273.15;
pub const PA_PER_BAR: f64 = 1e5;

/// Operating point of the reactor, held constant within a hold window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessParams {
    /// Total mass flow, kg/h.
    pub mass_flow: f64,
    /// Pa
    pub pressure: f64,
    /// K
    pub temperature: f64,
    pub mu_olefine: f64,
    pub mu_o2: f64,
}

impl ProcessParams {
    /// Builds an operating point from configuration units (bar, °C). The
    /// oxygen fraction is the complement of the olefine fraction.
    pub fn from_config_units(mass_flow: f64, pressure_bar: f64, temperature_c: f64, mu_olefine: f64) -> Self {
        Self {
            mass_flow,
            pressure: pressure_bar * PA_PER_BAR,
            temperature: temperature_c + ZERO_CELSIUS,
            mu_olefine,
            mu_o2: 1.0 - mu_olefine,
        }
    }

    pub fn pressure_bar(&self) -> f64 {
        self.pressure / PA_PER_BAR
    }

    pub fn temperature_c(&self) -> f64 {
        self.temperature - ZERO_CELSIUS
    }

    pub fn inlet_fractions(&self) -> [f64; N_SPECIES] {
        let mut mu = [0.0; N_SPECIES];
        mu[OLEFINE] = self.mu_olefine;
        mu[OXYGEN] = self.mu_o2;
        mu
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.mass_flow.is_finite()
            && self.mass_flow > 0.0
            && self.pressure > 0.0
            && self.temperature > 0.0
            && (0.0..=1.0).contains(&self.mu_olefine)
            && (0.0..=1.0).contains(&self.mu_o2)
            && (self.mu_olefine + self.mu_o2 - 1.0).abs() < 1e-9;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameters(format!("invalid process parameters {self:?}")))
        }
    }
}

/// A process parameter restricted to `levels` equidistant values spanning
/// `[min, max]`, both endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub levels: usize,
}

impl GridAxis {
    pub fn new(min: f64, max: f64) -> Self {
        Self { min, max, levels: 6 }
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.levels - 1) as f64
    }

    pub fn value(&self, level: usize) -> f64 {
        if level + 1 == self.levels {
            self.max
        } else {
            self.min + level as f64 * self.step()
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.levels).map(|n| self.value(n)).collect()
    }

    /// Standard deviation of the random walk between hold windows.
    pub fn walk_sigma(&self) -> f64 {
        (self.max - self.min) / 10.0
    }

    /// Clips to the range and rounds to the nearest grid value. A value exactly
    /// halfway between two grid points goes to the lower one.
    pub fn snap(&self, raw: f64) -> f64 {
        let clipped = raw.clamp(self.min, self.max);
        let pos = (clipped - self.min) / self.step();
        let level = (pos - 0.5).ceil().clamp(0.0, (self.levels - 1) as f64) as usize;
        self.value(level)
    }

    pub fn draw_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.min + (self.max - self.min) * rng.random::<f64>()
    }

    pub fn draw_step<R: Rng + ?Sized>(&self, prev: f64, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        prev + self.walk_sigma() * z
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max && self.levels >= 2) {
            return Err(Error::InvalidParameters(format!("bad range for {name}: {self:?}")));
        }
        Ok(())
    }
}

/// Ranges of the four independently sampled parameters, in configuration
/// units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRanges {
    /// kg/h
    pub mass_flow: GridAxis,
    /// bar
    pub pressure_bar: GridAxis,
    /// °C
    pub temperature_c: GridAxis,
    /// mass fraction
    pub mu_olefine: GridAxis,
}

impl Default for ParamRanges {
    fn default() -> Self {
        Self {
            mass_flow: GridAxis::new(3500.0, 4000.0),
            pressure_bar: GridAxis::new(1.25, 1.45),
            temperature_c: GridAxis::new(500.0, 510.0),
            mu_olefine: GridAxis::new(0.475, 0.525),
        }
    }
}

impl ParamRanges {
    pub fn validate(&self) -> Result<()> {
        self.mass_flow.validate("F")?;
        self.pressure_bar.validate("p")?;
        self.temperature_c.validate("T")?;
        self.mu_olefine.validate("mu_olefine")?;
        if self.mu_olefine.min < 0.0 || self.mu_olefine.max > 1.0 {
            return Err(Error::InvalidParameters("mu_olefine range must lie in [0, 1]".into()));
        }
        if self.mass_flow.min <= 0.0 || self.pressure_bar.min <= 0.0 || self.temperature_c.min <= -ZERO_CELSIUS {
            return Err(Error::InvalidParameters("F, p and T ranges must be physical".into()));
        }
        Ok(())
    }

    /// Whether every parameter of `p` sits exactly on its grid.
    pub fn on_grid(&self, p: &ProcessParams) -> bool {
        let grid = |axis: &GridAxis, v: f64| axis.values().contains(&v);
        grid(&self.mass_flow, p.mass_flow)
            && self.pressure_bar.values().iter().any(|b| b * PA_PER_BAR == p.pressure)
            && self.temperature_c.values().iter().any(|c| c + ZERO_CELSIUS == p.temperature)
            && grid(&self.mu_olefine, p.mu_olefine)
            && p.mu_o2 == 1.0 - p.mu_olefine
    }
}

/// Draws the next operating point: uniform over each range for the first
/// window, a Gaussian step from the previous value afterwards, then clipped
/// and snapped onto the grid. Draw order is F, p, T, mu_olefine.
pub fn sample_process_params<R: Rng + ?Sized>(
    prev: Option<&ProcessParams>,
    ranges: &ParamRanges,
    rng: &mut R,
) -> ProcessParams {
    let (f, p, t, mu) = match prev {
        None => (
            ranges.mass_flow.draw_uniform(rng),
            ranges.pressure_bar.draw_uniform(rng),
            ranges.temperature_c.draw_uniform(rng),
            ranges.mu_olefine.draw_uniform(rng),
        ),
        Some(prev) => (
            ranges.mass_flow.draw_step(prev.mass_flow, rng),
            ranges.pressure_bar.draw_step(prev.pressure_bar(), rng),
            ranges.temperature_c.draw_step(prev.temperature_c(), rng),
            ranges.mu_olefine.draw_step(prev.mu_olefine, rng),
        ),
    };
    ProcessParams::from_config_units(
        ranges.mass_flow.snap(f),
        ranges.pressure_bar.snap(p),
        ranges.temperature_c.snap(t),
        ranges.mu_olefine.snap(mu),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn flow_grid_has_six_levels_of_100() {
        let axis = ParamRanges::default().mass_flow;
        assert_eq!(axis.values(), vec![3500.0, 3600.0, 3700.0, 3800.0, 3900.0, 4000.0]);
    }

    #[test]
    fn midway_rounds_down() {
        let axis = ParamRanges::default().mass_flow;
        assert_eq!(axis.snap(3550.0), 3500.0);
        assert_eq!(axis.snap(3650.0), 3600.0);
        assert_eq!(axis.snap(3650.000001), 3700.0);
        assert_eq!(axis.snap(3649.999), 3600.0);
    }

    #[test]
    fn out_of_range_draws_are_clipped() {
        let axis = ParamRanges::default().temperature_c;
        assert_eq!(axis.snap(400.0), 500.0);
        assert_eq!(axis.snap(600.0), 510.0);
    }

    #[test]
    fn samples_stay_on_grid() {
        let ranges = ParamRanges::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut prev = None;
        for _ in 0..2000 {
            let p = sample_process_params(prev.as_ref(), &ranges, &mut rng);
            assert!(ranges.on_grid(&p), "{p:?}");
            p.validate().unwrap();
            prev = Some(p);
        }
    }

    #[test]
    fn temperature_walk_step_has_configured_sigma() {
        // Empirical standard deviation of raw Gaussian steps before rounding.
        let axis = ParamRanges::default().temperature_c;
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut prev = axis.snap(axis.draw_uniform(&mut rng));
        let n = 10_000;
        let mut steps = Vec::with_capacity(n);
        for _ in 0..n {
            let raw = axis.draw_step(prev, &mut rng);
            steps.push(raw - prev);
            prev = axis.snap(raw);
        }
        let mean = steps.iter().sum::<f64>() / n as f64;
        let var = steps.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        assert!((sd - 1.0).abs() < 0.15, "sd = {sd}");
    }

    #[test]
    fn oxygen_complements_olefine() {
        let ranges = ParamRanges::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = sample_process_params(None, &ranges, &mut rng);
        assert_eq!(p.mu_o2, 1.0 - p.mu_olefine);
        let mu = p.inlet_fractions();
        assert_eq!(&mu[2..], &[0.0, 0.0, 0.0]);
    }
}
