//! Isothermal, isobaric plug-flow reactor treated as a batch reactor over the
//! residence time.

use super::kinetics::{reaction_rates, KineticParams};
use super::process::ProcessParams;
use super::species::{SpeciesSet, N_REACTIONS, N_SPECIES, OLEFINE, PRODUCT};
use crate::error::{Error, Result};

pub type Composition = [f64; N_SPECIES];

/// Ideal-gas molar concentrations (mol/m³) of a mixture given by mass
/// fractions, at pressure `p` (Pa) and temperature `t` (K).
pub fn concentrations_from_fractions(
    mu: &Composition,
    p: f64,
    t: f64,
    species: &SpeciesSet,
    kin: &KineticParams,
) -> Result<Composition> {
    if !(p > 0.0 && t > 0.0) {
        return Err(Error::InvalidInput(format!("need p > 0 and T > 0, got p={p}, T={t}")));
    }
    if mu.iter().any(|m| !(*m >= 0.0)) {
        return Err(Error::InvalidInput(format!("negative mass fraction in {mu:?}")));
    }
    let total: f64 = mu.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("mass fractions sum to {total}")));
    }
    let moles_per_kg: f64 = mu.iter().zip(&species.molar_masses).map(|(m, mm)| m / mm).sum();
    if !(moles_per_kg > 0.0) {
        return Err(Error::InvalidInput("mixture has no moles".into()));
    }
    let total_conc = p / (kin.gas_constant_si() * t);
    let mut c = [0.0; N_SPECIES];
    for i in 0..N_SPECIES {
        c[i] = total_conc * (mu[i] / species.molar_masses[i]) / moles_per_kg;
    }
    Ok(c)
}

/// Residence time in hours, `V/F · Σ c_i M_i` with the inlet concentrations.
pub fn residence_time(params: &ProcessParams, species: &SpeciesSet, kin: &KineticParams) -> Result<f64> {
    params.validate()?;
    let c_in = concentrations_from_fractions(
        &params.inlet_fractions(),
        params.pressure,
        params.temperature,
        species,
        kin,
    )?;
    let density: f64 = c_in.iter().zip(&species.molar_masses).map(|(c, m)| c * m).sum();
    let t_res = kin.volume / params.mass_flow * density;
    if t_res.is_finite() && t_res > 0.0 {
        Ok(t_res)
    } else {
        Err(Error::InvalidParameters(format!("residence time evaluates to {t_res}")))
    }
}

/// Reactor outlet for one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct Outlet {
    /// h
    pub residence_time: f64,
    pub inlet_concentrations: Composition,
    /// End point of the batch integration over the residence time.
    pub batch_concentrations: Composition,
    /// kg/h
    pub mass_flows: Composition,
    pub mass_fractions: Composition,
    /// Outlet concentrations re-derived from the outlet mass fractions via the
    /// ideal gas law.
    pub concentrations: Composition,
    /// Substeps shortened because a reactant ran out.
    pub clamp_events: usize,
}

impl Outlet {
    pub fn total_mass_flow(&self) -> f64 {
        self.mass_flows.iter().sum()
    }
}

fn rates(c: &Composition, t: f64, activity: f64, kin: &KineticParams) -> [f64; N_REACTIONS] {
    // Stage points may dip marginally below zero near depletion; the rate laws
    // only see the non-negative part.
    let mut c_pos = *c;
    for v in &mut c_pos {
        *v = v.max(0.0);
    }
    let (r1, r2) = reaction_rates(&c_pos, t, activity, kin).expect("non-negative by construction");
    [r1, r2]
}

/// `c + ν·extent`
fn advance(c: &Composition, extent: &[f64; N_REACTIONS], species: &SpeciesSet) -> Composition {
    let mut out = *c;
    for i in 0..N_SPECIES {
        for j in 0..N_REACTIONS {
            out[i] += species.stoichiometry[i][j] * extent[j];
        }
    }
    out
}

fn scaled(a: f64, r: &[f64; N_REACTIONS]) -> [f64; N_REACTIONS] {
    [a * r[0], a * r[1]]
}

/// Integrates `dc/dt = ν r(c)` over the residence time with `substeps` fixed
/// RK4 steps on the reaction extents, then converts the concentration change into outlet mass flows.
pub fn integrate_plug_flow(
    params: &ProcessParams,
    activity: f64,
    species: &SpeciesSet,
    kin: &KineticParams,
    substeps: usize,
) -> Result<Outlet> {
    if substeps == 0 {
        return Err(Error::InvalidParameters("substeps must be >= 1".into()));
    }
    if !(activity > 0.0 && activity <= 1.0) {
        return Err(Error::InvalidParameters(format!("activity {activity} outside (0, 1]")));
    }
    let t_res = residence_time(params, species, kin)?;
    let mu_in = params.inlet_fractions();
    let c_in = concentrations_from_fractions(&mu_in, params.pressure, params.temperature, species, kin)?;
    let temp = params.temperature;

    // Rates are per second, residence time is in hours.
    let h = t_res * 3600.0 / substeps as f64;
    let mut c = c_in;
    let mut clamp_events = 0;
    for _ in 0..substeps {
        let k1 = rates(&c, temp, activity, kin);
        let k2 = rates(&advance(&c, &scaled(0.5 * h, &k1), species), temp, activity, kin);
        let k3 = rates(&advance(&c, &scaled(0.5 * h, &k2), species), temp, activity, kin);
        let k4 = rates(&advance(&c, &scaled(h, &k3), species), temp, activity, kin);
        let mut extent = [0.0; N_REACTIONS];
        for j in 0..N_REACTIONS {
            extent[j] = h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        // A step that would overdraw a reactant is shortened so the limiting
        // species lands on zero. Scaling reaction extents keeps every element
        // balance intact.
        let next = advance(&c, &extent, species);
        let mut share: f64 = 1.0;
        for i in 0..N_SPECIES {
            if next[i] < 0.0 {
                share = share.min(c[i] / (c[i] - next[i]));
            }
        }
        if share < 1.0 {
            clamp_events += 1;
            c = advance(&c, &scaled(share, &extent), species);
            for v in &mut c {
                *v = v.max(0.0);
            }
        } else {
            c = next;
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::Simulation {
                message: "non-finite concentration during RK4 integration".into(),
                state: format!("params={params:?}, activity={activity}, c={c:?}"),
            });
        }
    }
    if clamp_events > 0 {
        log::debug!("{clamp_events} RK4 substeps shortened at reactant depletion at {params:?}");
    }

    // Volumetric flow V/t_res (m³/h) carries the concentration change out.
    let volumetric_flow = kin.volume / t_res;
    let mut mass_flows = [0.0; N_SPECIES];
    for i in 0..N_SPECIES {
        let inlet = mu_in[i] * params.mass_flow;
        mass_flows[i] = inlet + volumetric_flow * species.molar_masses[i] * (c[i] - c_in[i]);
    }
    let total: f64 = mass_flows.iter().sum();
    let mut mass_fractions = [0.0; N_SPECIES];
    for i in 0..N_SPECIES {
        // Round-off can leave a fully consumed species at -1e-16.
        mass_fractions[i] = (mass_flows[i] / total).max(0.0);
    }
    let norm: f64 = mass_fractions.iter().sum();
    for m in &mut mass_fractions {
        *m /= norm;
    }
    let concentrations =
        concentrations_from_fractions(&mass_fractions, params.pressure, params.temperature, species, kin)?;
    Ok(Outlet {
        residence_time: t_res,
        inlet_concentrations: c_in,
        batch_concentrations: c,
        mass_flows,
        mass_fractions,
        concentrations,
        clamp_events,
    })
}

/// Conversion and selectivity of one reactor pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Performance {
    pub conversion: f64,
    /// `None` when no olefine was consumed.
    pub selectivity: Option<f64>,
}

/// Conversion of olefine and selectivity towards the product, both as
/// fractions. Selectivity is clamped to [0, 1].
pub fn selectivity_conversion(c_in: &Composition, c_out: &Composition) -> Result<Performance> {
    let fed = c_in[OLEFINE];
    if !(fed > 0.0) {
        return Err(Error::InvalidInput("inlet olefine concentration must be positive".into()));
    }
    let consumed = fed - c_out[OLEFINE];
    if consumed == 0.0 {
        return Ok(Performance { conversion: 0.0, selectivity: None });
    }
    Ok(Performance {
        conversion: consumed / fed,
        selectivity: Some((c_out[PRODUCT] / consumed).clamp(0.0, 1.0)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_params() -> ProcessParams {
        ProcessParams::from_config_units(3750.0, 1.35, 505.0, 0.5)
    }

    #[test]
    fn single_species_follows_ideal_gas_law() {
        let kin = KineticParams::default();
        let s = SpeciesSet::default();
        let c = concentrations_from_fractions(&[0.0, 1.0, 0.0, 0.0, 0.0], 1e5, 300.0, &s, &kin).unwrap();
        assert!((c[1] - 1e5 / (8.314 * 300.0)).abs() < 1e-10);
        assert_eq!(c[0], 0.0);
        assert_eq!(c[4], 0.0);
    }

    #[test]
    fn total_concentration_at_reference() {
        // p/RT = 1.35e5 / (8.314 * 778.15) = 20.867 mol/m³
        let kin = KineticParams::default();
        let s = SpeciesSet::default();
        let p = reference_params();
        let c = concentrations_from_fractions(&p.inlet_fractions(), p.pressure, p.temperature, &s, &kin).unwrap();
        let total: f64 = c.iter().sum();
        assert!((total - 20.867).abs() < 1e-3, "{total}");
    }

    #[test]
    fn fractions_must_sum_to_one() {
        let kin = KineticParams::default();
        let s = SpeciesSet::default();
        let err = concentrations_from_fractions(&[0.5, 0.4, 0.0, 0.0, 0.0], 1e5, 300.0, &s, &kin);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn residence_time_reduces_to_volume_times_density_over_flow() {
        // Unit volume, unit flow and a species whose gas density is 1 kg/m³.
        let mut kin = KineticParams::default();
        kin.volume = 1.0;
        let mut s = SpeciesSet::default();
        let (p, t) = (1e5, 300.0);
        s.molar_masses[0] = kin.gas_constant_si() * t / p;
        let params = ProcessParams { mass_flow: 1.0, pressure: p, temperature: t, mu_olefine: 1.0, mu_o2: 0.0 };
        let t_res = residence_time(&params, &s, &kin).unwrap();
        assert!((t_res - 1.0).abs() < 1e-12, "{t_res}");
    }

    #[test]
    fn residence_time_at_reference() {
        // rho = (p/RT) / sum(mu/M) with M_olef = 42.08 g/mol, M_O2 = 32 g/mol:
        // 20.867 / (0.5/0.04208 + 0.5/0.032) = 0.7585 kg/m³
        // t_res = 0.04712 * 0.7585 / 3750 = 9.532e-6 h
        let t_res = residence_time(&reference_params(), &SpeciesSet::default(), &KineticParams::default()).unwrap();
        assert!((t_res - 9.532e-6).abs() < 1e-9, "{t_res}");
    }

    #[test]
    fn doubling_flow_halves_residence_time() {
        let s = SpeciesSet::default();
        let kin = KineticParams::default();
        let p = reference_params();
        let mut p2 = p;
        p2.mass_flow *= 2.0;
        let a = residence_time(&p, &s, &kin).unwrap();
        let b = residence_time(&p2, &s, &kin).unwrap();
        assert_eq!(b, a / 2.0);
    }

    #[test]
    fn zero_rate_constants_leave_inlet_unchanged() {
        let mut kin = KineticParams::default();
        kin.k1 = 0.0;
        kin.k2 = 0.0;
        let p = reference_params();
        let out = integrate_plug_flow(&p, 1.0, &SpeciesSet::default(), &kin, 16).unwrap();
        assert_eq!(out.batch_concentrations, out.inlet_concentrations);
        assert_eq!(out.mass_flows[0], p.mass_flow * p.mu_olefine);
        assert_eq!(out.mass_flows[1], p.mass_flow * p.mu_o2);
        assert_eq!(&out.mass_flows[2..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn mass_is_conserved_at_reference() {
        let p = reference_params();
        let out = integrate_plug_flow(&p, 1.0, &SpeciesSet::default(), &KineticParams::default(), 512).unwrap();
        let rel = (out.total_mass_flow() - p.mass_flow).abs() / p.mass_flow;
        assert!(rel < 1e-12, "{rel}");
    }

    #[test]
    fn step_halving_converges() {
        let s = SpeciesSet::default();
        let kin = KineticParams::default();
        let p = reference_params();
        let coarse = integrate_plug_flow(&p, 1.0, &s, &kin, 512).unwrap();
        let fine = integrate_plug_flow(&p, 1.0, &s, &kin, 1024).unwrap();
        // Relative to the composition's max-norm: the olefine is nearly used
        // up, so a per-species ratio would compare round-off with round-off.
        let scale = fine.concentrations.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for i in 0..N_SPECIES {
            let rel = (coarse.concentrations[i] - fine.concentrations[i]).abs() / scale;
            assert!(rel < 1e-8, "species {i}: {rel}");
        }
    }

    #[test]
    fn no_reaction_gives_zero_conversion_and_undefined_selectivity() {
        let c = [10.0, 10.0, 0.0, 0.0, 0.0];
        let perf = selectivity_conversion(&c, &c).unwrap();
        assert_eq!(perf.conversion, 0.0);
        assert_eq!(perf.selectivity, None);
    }

    #[test]
    fn main_reaction_only_is_fully_selective() {
        let c_in = [10.0, 10.0, 0.0, 0.0, 0.0];
        let c_out = [6.0, 8.0, 4.0, 0.0, 0.0];
        let perf = selectivity_conversion(&c_in, &c_out).unwrap();
        assert_eq!(perf.conversion, 0.4);
        assert_eq!(perf.selectivity, Some(1.0));
    }

    #[test]
    fn mixed_reactions_match_mole_bookkeeping() {
        // With the main reaction slowed down both reactions matter. The batch
        // end point must satisfy the per-reaction extents exactly: product
        // comes only from r1, CO2 only from r2 (3 per extent).
        let mut kin = KineticParams::default();
        kin.k1 = 300.0;
        kin.k2 /= 20.0;
        let s = SpeciesSet::default();
        let p = reference_params();
        let out = integrate_plug_flow(&p, 1.0, &s, &kin, 256).unwrap();
        let c_in = out.inlet_concentrations;
        let c_end = out.batch_concentrations;
        let xi1 = c_end[PRODUCT];
        let xi2 = c_end[3] / 3.0;
        assert_eq!(out.clamp_events, 0);
        assert!(xi1 > 0.0 && xi2 > 0.0 && c_end[1] > 0.0);
        assert!((c_in[OLEFINE] - c_end[OLEFINE] - (xi1 + xi2)).abs() < 1e-10);
        assert!((c_in[1] - c_end[1] - (0.5 * xi1 + 4.5 * xi2)).abs() < 1e-10);
        assert!((c_end[4] - c_end[3]).abs() < 1e-12);
        // On batch concentrations selectivity is the extent ratio.
        let perf = selectivity_conversion(&c_in, &c_end).unwrap();
        let expect = xi1 / (xi1 + xi2);
        assert!((perf.selectivity.unwrap() - expect).abs() < 1e-10);
        assert!((0.0..1.0).contains(&perf.conversion));
    }

    #[test]
    fn rejects_bad_activity() {
        let p = reference_params();
        let s = SpeciesSet::default();
        let kin = KineticParams::default();
        assert!(integrate_plug_flow(&p, 0.0, &s, &kin, 8).is_err());
        assert!(integrate_plug_flow(&p, 1.5, &s, &kin, 8).is_err());
    }
}
