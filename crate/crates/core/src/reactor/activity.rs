use super::kinetics::KineticParams;
use super::process::ProcessParams;
use crate::error::{Error, Result};

/// Lower bound on catalyst activity; the deactivation law diverges at zero.
pub const MIN_ACTIVITY: f64 = 1e-3;

/// dA/dt in 1/h for activity `a` as a fraction.
pub fn deactivation_rate(a: f64, params: &ProcessParams, kin: &KineticParams) -> f64 {
    let oxygen_load = params.mu_o2 * params.mass_flow;
    -kin.arrhenius(kin.k_a, kin.e_a, params.temperature) * oxygen_load.powi(3) * a.powi(-5)
}

/// Advances the activity by `dt` hours with `substeps` RK4 steps. The result
/// never increases and never drops below `min_activity`.
pub fn step_activity(
    activity: f64,
    params: &ProcessParams,
    dt: f64,
    kin: &KineticParams,
    substeps: usize,
    min_activity: f64,
) -> Result<f64> {
    if !(activity > 0.0 && activity <= 1.0) {
        return Err(Error::InvalidParameters(format!("activity {activity} outside (0, 1]")));
    }
    if !(dt > 0.0) || substeps == 0 {
        return Err(Error::InvalidParameters("dt and substeps must be positive".into()));
    }
    let f = |a: f64| deactivation_rate(a.max(min_activity), params, kin);
    let h = dt / substeps as f64;
    let mut a = activity;
    for _ in 0..substeps {
        let k1 = f(a);
        let k2 = f(a + 0.5 * h * k1);
        let k3 = f(a + 0.5 * h * k2);
        let k4 = f(a + h * k3);
        a += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !(a > min_activity) {
            return Ok(min_activity);
        }
    }
    Ok(a.clamp(min_activity, activity))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> ProcessParams {
        ProcessParams::from_config_units(3750.0, 1.35, 505.0, 0.5)
    }

    #[test]
    fn zero_flow_freezes_activity() {
        let mut p = reference();
        p.mass_flow = 0.0;
        let a = step_activity(0.7, &p, 1.0, &KineticParams::default(), 8, MIN_ACTIVITY).unwrap();
        assert_eq!(a, 0.7);
    }

    #[test]
    fn reference_rate_matches_hand_evaluation() {
        // 2.7e-10 * exp(-50 / (8.314e-3 * 778.15)) * 1875^3 = 7.80e-4 per hour
        let rate = deactivation_rate(1.0, &reference(), &KineticParams::default());
        let hand = 2.7e-10 * (-50.0f64 / (8.314e-3 * 778.15)).exp() * 1875.0f64.powi(3);
        assert!((rate + hand).abs() < 1e-15);
        assert!((rate + 7.80e-4).abs() < 1e-5, "{rate}");
    }

    #[test]
    fn lower_activity_decays_faster_by_power_law() {
        let kin = KineticParams::default();
        let p = reference();
        let ratio = deactivation_rate(0.8, &p, &kin) / deactivation_rate(1.0, &p, &kin);
        assert!((ratio - 0.8f64.powi(-5)).abs() < 1e-12);
    }

    #[test]
    fn rk4_step_matches_closed_form() {
        // A^6 = A0^6 - 6 k t for the constant-coefficient law.
        let kin = KineticParams::default();
        let p = reference();
        let k = -deactivation_rate(1.0, &p, &kin);
        let mut a = 1.0;
        for hour in 1..=150 {
            a = step_activity(a, &p, 1.0, &kin, 32, MIN_ACTIVITY).unwrap();
            let exact = (1.0 - 6.0 * k * hour as f64).powf(1.0 / 6.0);
            assert!((a - exact).abs() < 1e-9, "hour {hour}: {a} vs {exact}");
        }
    }

    #[test]
    fn activity_is_monotone_and_floored() {
        let kin = KineticParams::default();
        let p = reference();
        let mut a = 1.0;
        for _ in 0..400 {
            let next = step_activity(a, &p, 1.0, &kin, 4, MIN_ACTIVITY).unwrap();
            assert!(next <= a && next >= MIN_ACTIVITY);
            a = next;
        }
        assert_eq!(a, MIN_ACTIVITY);
    }
}
