use super::species::{OLEFINE, OXYGEN};
use crate::error::{Error, Result};

/// Rate constants and reactor volume of the synthetic process.
///
/// Activation energies are in kJ/mol, so `gas_constant` is in kJ/mol/K as
/// well. Reaction rates come out in mol/m³/s, the deactivation rate in 1/h.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KineticParams {
    pub k1: f64,
    pub e1: f64,
    pub k2: f64,
    pub e2: f64,
    pub k_a: f64,
    pub e_a: f64,
    /// m³
    pub volume: f64,
    /// kJ/mol/K
    pub gas_constant: f64,
}

impl Default for KineticParams {
    fn default() -> Self {
        Self {
            k1: 30000.0,
            e1: 42.0,
            k2: 15000.0,
            e2: 45.0,
            k_a: 2.7e-10,
            e_a: 50.0,
            volume: 4.712e-2,
            gas_constant: 8.314e-3,
        }
    }
}

impl KineticParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("k1", self.k1),
            ("E1", self.e1),
            ("k2", self.k2),
            ("E2", self.e2),
            ("kA", self.k_a),
            ("EA", self.e_a),
            ("V", self.volume),
            ("R", self.gas_constant),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameters(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Gas constant in J/mol/K, for the ideal gas law with pressures in Pa.
    pub fn gas_constant_si(&self) -> f64 {
        self.gas_constant * 1e3
    }

    pub fn arrhenius(&self, prefactor: f64, activation: f64, temperature: f64) -> f64 {
        prefactor * (-activation / (self.gas_constant * temperature)).exp()
    }
}

/// Volumetric rates (r1, r2) in mol/m³/s. Only the main reaction is scaled by
/// the catalyst activity.
pub fn reaction_rates(
    concentrations: &[f64; 5],
    temperature: f64,
    activity: f64,
    kin: &KineticParams,
) -> Result<(f64, f64)> {
    if let Some(c) = concentrations.iter().find(|c| !(**c >= 0.0)) {
        return Err(Error::Domain(format!("negative concentration {c}")));
    }
    let c_olef = concentrations[OLEFINE];
    let c_o2 = concentrations[OXYGEN];
    let r1 = activity * kin.arrhenius(kin.k1, kin.e1, temperature) * c_olef * c_o2;
    let r2 = kin.arrhenius(kin.k2, kin.e2, temperature) * c_olef * c_o2.sqrt();
    Ok((r1, r2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_olefine_means_no_reaction() {
        let c = [0.0, 10.0, 0.0, 0.0, 0.0];
        let (r1, r2) = reaction_rates(&c, 778.15, 1.0, &KineticParams::default()).unwrap();
        assert_eq!((r1, r2), (0.0, 0.0));
    }

    #[test]
    fn activity_scales_main_reaction_only() {
        let c = [10.0, 10.0, 0.0, 0.0, 0.0];
        let kin = KineticParams::default();
        let full = reaction_rates(&c, 778.15, 1.0, &kin).unwrap();
        let half = reaction_rates(&c, 778.15, 0.5, &kin).unwrap();
        assert_eq!(half.0, 0.5 * full.0);
        assert_eq!(half.1, full.1);
    }

    #[test]
    fn matches_hand_evaluation_at_reference_point() {
        // Scalar evaluation of both rate laws with the default constants.
        let rt = 8.314e-3 * 778.15;
        let r1 = 30000.0 * (-42.0f64 / rt).exp() * 10.0 * 10.0;
        let r2 = 15000.0 * (-45.0f64 / rt).exp() * 10.0 * 10.0f64.sqrt();
        let c = [10.0, 10.0, 0.0, 0.0, 0.0];
        let (a, b) = reaction_rates(&c, 778.15, 1.0, &KineticParams::default()).unwrap();
        assert!((a - r1).abs() <= 1e-12 * r1);
        assert!((b - r2).abs() <= 1e-12 * r2);
        // Roughly 4.55e3 and 4.52e2 mol/m³/s.
        assert!((a - 4546.719).abs() < 1e-2, "{a}");
        assert!((b - 452.148).abs() < 1e-2, "{b}");
    }

    #[test]
    fn negative_concentration_is_a_domain_error() {
        let c = [1.0, -1e-3, 0.0, 0.0, 0.0];
        assert!(matches!(
            reaction_rates(&c, 778.15, 1.0, &KineticParams::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn defaults_are_positive() {
        KineticParams::default().validate().unwrap();
        let mut k = KineticParams::default();
        k.volume = 0.0;
        assert!(k.validate().is_err());
    }
}
