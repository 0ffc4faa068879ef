use crate::error::{Error, Result};

pub const OLEFINE: usize = 0;
pub const OXYGEN: usize = 1;
pub const PRODUCT: usize = 2;
pub const CARBON_DIOXIDE: usize = 3;
pub const WATER: usize = 4;

pub const N_SPECIES: usize = 5;
pub const N_REACTIONS: usize = 2;

/// Water molar mass chosen so the combustion reaction balances exactly
/// against the other four molar masses (18.0167 g/mol).
pub const WATER_MOLAR_MASS: f64 = (0.04208 + 4.5 * 0.032 - 3.0 * 0.04401) / 3.0;

/// The five gas-phase species of the oxidation process and the two reactions
/// linking them.
///
/// Column 0 of the stoichiometry is the catalysed main reaction
/// (olefine + ½ O2 → product), column 1 the uncatalysed combustion
/// (olefine + 4.5 O2 → 3 CO2 + 3 H2O).
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesSet {
    pub names: [&'static str; N_SPECIES],
    /// kg/mol
    pub molar_masses: [f64; N_SPECIES],
    /// mol species per mol reaction extent, indexed `[species][reaction]`.
    pub stoichiometry: [[f64; N_REACTIONS]; N_SPECIES],
}

impl Default for SpeciesSet {
    fn default() -> Self {
        Self::propylene_oxidation()
    }
}

impl SpeciesSet {
    /// Propylene epoxidation with total combustion as side reaction.
    pub fn propylene_oxidation() -> Self {
        Self {
            names: ["olefine", "O2", "product", "CO2", "H2O"],
            molar_masses: [0.04208, 0.03200, 0.05808, 0.04401, WATER_MOLAR_MASS],
            stoichiometry: [
                [-1.0, -1.0],
                [-0.5, -4.5],
                [1.0, 0.0],
                [0.0, 3.0],
                [0.0, 3.0],
            ],
        }
    }

    /// Net mass produced per mol extent of reaction `j` (kg/mol). Zero for a
    /// balanced reaction.
    pub fn mass_imbalance(&self, reaction: usize) -> f64 {
        (0..N_SPECIES)
            .map(|i| self.stoichiometry[i][reaction] * self.molar_masses[i])
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.molar_masses.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(Error::InvalidParameters(
                "molar masses must be positive and finite".into(),
            ));
        }
        for j in 0..N_REACTIONS {
            let imbalance = self.mass_imbalance(j);
            if imbalance.abs() > 1e-3 {
                return Err(Error::InvalidParameters(format!(
                    "reaction {} is not mass balanced ({imbalance:e} kg/mol)",
                    j + 1
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_reactions_balance_mass() {
        let s = SpeciesSet::default();
        s.validate().unwrap();
        assert!(s.mass_imbalance(0).abs() < 1e-15);
        assert!(s.mass_imbalance(1).abs() < 1e-15);
    }

    #[test]
    fn unbalanced_reaction_is_rejected() {
        let mut s = SpeciesSet::default();
        s.stoichiometry[PRODUCT][0] = 2.0;
        assert!(matches!(s.validate(), Err(Error::InvalidParameters(_))));
    }
}
