//! Conversion between physical parameters and the dimensionless groups
//! governing the solver, plus field scaling in both directions.
//!
//! Scalings: x = L x̂, v = V_in v̂, t = (L/V_in) t̂, p = P_out + ρ V_in² p̂,
//! c = c_in ĉ, m = c_in L m̂, M = c_in L³ M̂.

use thiserror::Error;

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;

#[derive(Debug, Error)]
pub enum GroupsError {
    #[error("parameter {name} must be strictly positive, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("parameter {name} must be nonnegative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("kinetics arrays must have equal length per boundary class")]
    ClassMismatch,
}

/// Per-boundary-class surface kinetics rates in physical units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassRates {
    /// Adsorption rate, m/s.
    pub kappa_a: f64,
    /// Desorption rate, 1/s.
    pub kappa_d: f64,
    /// Maximal adsorbed surface concentration, number/m².
    pub m_inf: f64,
    /// Slip length, m.
    pub slip_beta: f64,
}

impl Default for ClassRates {
    fn default() -> Self {
        ClassRates {
            kappa_a: 0.0,
            kappa_d: 0.0,
            m_inf: f64::INFINITY,
            slip_beta: 0.0,
        }
    }
}

/// Physical problem parameters in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    /// Reference length, m.
    pub length_scale: f64,
    /// Fluid density, kg/m³.
    pub rho: f64,
    /// Dynamic viscosity, Pa·s.
    pub mu: f64,
    /// Inlet speed, m/s.
    pub v_in: f64,
    /// Outlet pressure, Pa.
    pub p_out: f64,
    /// Solute diffusivity, m²/s.
    pub diffusivity: f64,
    /// Inlet concentration, number/m³.
    pub c_in: f64,
    /// Frumkin interaction energy parameter, J·m².
    pub beta_frumkin: f64,
    /// Temperature, K.
    pub temperature: f64,
    /// Per boundary class kinetics and slip.
    pub classes: Vec<ClassRates>,
}

impl PhysicalParams {
    fn validate(&self) -> Result<(), GroupsError> {
        let positive = [
            ("L", self.length_scale),
            ("rho", self.rho),
            ("mu", self.mu),
            ("V_in", self.v_in),
        ];
        for (name, value) in positive {
            if !(value > 0.0) {
                return Err(GroupsError::NotPositive { name, value });
            }
        }
        let nonneg = [
            ("D", self.diffusivity),
            ("T", self.temperature),
            ("c_in", self.c_in),
        ];
        for (name, value) in nonneg {
            if value < 0.0 {
                return Err(GroupsError::Negative { name, value });
            }
        }
        for c in &self.classes {
            for (name, value) in [
                ("kappa_a", c.kappa_a),
                ("kappa_d", c.kappa_d),
                ("m_inf", c.m_inf),
                ("slip_beta", c.slip_beta),
            ] {
                if value < 0.0 {
                    return Err(GroupsError::Negative { name, value });
                }
            }
        }
        Ok(())
    }
}

/// Retained scales needed to move fields back to dimensional form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scales {
    pub length: f64,
    pub v_in: f64,
    pub c_in: f64,
    pub p_out: f64,
    pub rho: f64,
}

/// Dimensionless parameter groups.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionlessGroups {
    pub reynolds: f64,
    /// Infinite when the diffusivity is zero.
    pub peclet: f64,
    pub da_adsorption: Vec<f64>,
    pub da_desorption: Vec<f64>,
    pub m_inf_hat: Vec<f64>,
    pub beta_hat: f64,
    pub slip_beta_hat: Vec<f64>,
    pub scales: Scales,
}

/// Kind tag for scaling a field between dimensional and dimensionless form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Velocity,
    Pressure,
    Concentration,
    SurfaceConcentration,
    Time,
    Length,
}

impl FieldKind {
    pub fn parse(s: &str) -> Option<FieldKind> {
        Some(match s {
            "velocity" => FieldKind::Velocity,
            "pressure" => FieldKind::Pressure,
            "concentration" => FieldKind::Concentration,
            "surface_concentration" => FieldKind::SurfaceConcentration,
            "time" => FieldKind::Time,
            "length" => FieldKind::Length,
            _ => return None,
        })
    }
}

/// Computes Re, Pe, the Damköhler numbers and the dimensionless kinetic
/// parameters from physical inputs.
pub fn compute_groups(p: &PhysicalParams) -> Result<DimensionlessGroups, GroupsError> {
    p.validate()?;
    let l = p.length_scale;
    let reynolds = l * p.rho * p.v_in / p.mu;
    let peclet = if p.diffusivity == 0.0 {
        f64::INFINITY
    } else {
        p.v_in * l / p.diffusivity
    };
    let da_adsorption = p.classes.iter().map(|c| c.kappa_a / p.v_in).collect();
    let da_desorption = p.classes.iter().map(|c| c.kappa_d * l / p.v_in).collect();
    let m_inf_hat = p
        .classes
        .iter()
        .map(|c| {
            if c.m_inf.is_finite() && p.c_in > 0.0 {
                c.m_inf / (p.c_in * l)
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let beta_hat = if p.temperature > 0.0 {
        2.0 * p.beta_frumkin * p.c_in * l / (BOLTZMANN * p.temperature)
    } else {
        0.0
    };
    let slip_beta_hat = p.classes.iter().map(|c| c.slip_beta / l).collect();
    Ok(DimensionlessGroups {
        reynolds,
        peclet,
        da_adsorption,
        da_desorption,
        m_inf_hat,
        beta_hat,
        slip_beta_hat,
        scales: Scales {
            length: l,
            v_in: p.v_in,
            c_in: p.c_in,
            p_out: p.p_out,
            rho: p.rho,
        },
    })
}

impl DimensionlessGroups {
    pub fn n_classes(&self) -> usize {
        self.da_adsorption.len()
    }

    /// Dimensionless voxel edge length for a physical voxel size.
    pub fn dx_hat(&self, voxel_size: f64) -> f64 {
        voxel_size / self.scales.length
    }

    /// Forward scaling: one dimensional value to dimensionless.
    pub fn nondimensionalize(&self, kind: FieldKind, value: f64) -> f64 {
        let s = &self.scales;
        match kind {
            FieldKind::Velocity => value / s.v_in,
            FieldKind::Pressure => (value - s.p_out) / (s.rho * s.v_in * s.v_in),
            FieldKind::Concentration => value / s.c_in,
            FieldKind::SurfaceConcentration => value / (s.c_in * s.length),
            FieldKind::Time => value * s.v_in / s.length,
            FieldKind::Length => value / s.length,
        }
    }

    /// Inverse scaling: one dimensionless value back to dimensional form.
    pub fn redimensionalize(&self, kind: FieldKind, value: f64) -> f64 {
        let s = &self.scales;
        match kind {
            FieldKind::Velocity => value * s.v_in,
            FieldKind::Pressure => s.p_out + value * s.rho * s.v_in * s.v_in,
            FieldKind::Concentration => value * s.c_in,
            FieldKind::SurfaceConcentration => value * s.c_in * s.length,
            FieldKind::Time => value * s.length / s.v_in,
            FieldKind::Length => value * s.length,
        }
    }

    /// Dimensional total adsorbed amount from the M̂ diagnostic.
    pub fn total_amount(&self, m_hat_total: f64) -> f64 {
        let s = &self.scales;
        m_hat_total * s.c_in * s.length * s.length * s.length
    }

    /// Writes every group as `key=value` lines, the format printed by the
    /// `groups` CLI subcommand.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: f64| {
            out.push_str(&format!("{k}={v:.6e}\n"));
        };
        line("Re", self.reynolds);
        line("Pe", self.peclet);
        for i in 0..self.n_classes() {
            line(&format!("Da_a[{i}]"), self.da_adsorption[i]);
            line(&format!("Da_d[{i}]"), self.da_desorption[i]);
            line(&format!("m_inf_hat[{i}]"), self.m_inf_hat[i]);
            line(&format!("slip_beta_hat[{i}]"), self.slip_beta_hat[i]);
        }
        line("beta_hat", self.beta_hat);
        line("L", self.scales.length);
        line("V_in", self.scales.v_in);
        line("c_in", self.scales.c_in);
        line("P_out", self.scales.p_out);
        line("rho", self.scales.rho);
        out
    }
}

/// Scales initial fields to dimensionless form:
/// v̂₀ = v₀/V_in, p̂₀ = (p₀−P_out)/(ρV_in²), ĉ₀ = c₀/c_in, m̂₀ = m₀/(c_in L).
pub fn nondim_initial_conditions(
    groups: &DimensionlessGroups,
    v0: &[f64],
    p0: &[f64],
    c0: &[f64],
    m0: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let nd = |kind: FieldKind, xs: &[f64]| -> Vec<f64> {
        xs.iter().map(|&x| groups.nondimensionalize(kind, x)).collect()
    };
    (
        nd(FieldKind::Velocity, v0),
        nd(FieldKind::Pressure, p0),
        nd(FieldKind::Concentration, c0),
        nd(FieldKind::SurfaceConcentration, m0),
    )
}
