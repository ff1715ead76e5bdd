//! Poroelastic material properties, derived Biot coefficients and the
//! symmetric-form system matrices.

pub mod field;
pub mod presets;
pub mod system;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use field::{Coefficients, CoefficientField, Sampling};
pub use presets::{all_presets, preset, PRESET_NAMES};
pub use system::{a_matrix, normal_matrix, sample_directions, FirstOrderBlocks, SystemMatrices};

/// Drained (frame) stiffness in Voigt order 11, 22, 33, 23, 13, 12.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stiffness {
    pub c11: f64,
    pub c12: f64,
    pub c13: f64,
    pub c22: f64,
    pub c23: f64,
    pub c33: f64,
    pub c44: f64,
    pub c55: f64,
    pub c66: f64,
}

impl Stiffness {
    /// Transversely isotropic stiffness with symmetry axis 3.
    pub fn transversely_isotropic(c11: f64, c12: f64, c13: f64, c33: f64, c55: f64) -> Self {
        Self {
            c11,
            c12,
            c13,
            c22: c11,
            c23: c13,
            c33,
            c44: c55,
            c55,
            c66: 0.5 * (c11 - c12),
        }
    }

    /// Isotropic stiffness from frame bulk and shear moduli.
    pub fn isotropic(k_fr: f64, mu_fr: f64) -> Self {
        let l = k_fr - 2.0 * mu_fr / 3.0;
        let p = k_fr + 4.0 * mu_fr / 3.0;
        Self::transversely_isotropic(p, l, l, p, mu_fr)
    }

    pub fn matrix(&self) -> nalgebra::SMatrix<f64, 6, 6> {
        let mut c = nalgebra::SMatrix::<f64, 6, 6>::zeros();
        c[(0, 0)] = self.c11;
        c[(1, 1)] = self.c22;
        c[(2, 2)] = self.c33;
        c[(0, 1)] = self.c12;
        c[(1, 0)] = self.c12;
        c[(0, 2)] = self.c13;
        c[(2, 0)] = self.c13;
        c[(1, 2)] = self.c23;
        c[(2, 1)] = self.c23;
        c[(3, 3)] = self.c44;
        c[(4, 4)] = self.c55;
        c[(5, 5)] = self.c66;
        c
    }

    fn scale(&self, s: f64) -> Self {
        Self {
            c11: self.c11 * s,
            c12: self.c12 * s,
            c13: self.c13 * s,
            c22: self.c22 * s,
            c23: self.c23 * s,
            c33: self.c33 * s,
            c44: self.c44 * s,
            c55: self.c55 * s,
            c66: self.c66 * s,
        }
    }
}

/// Unit system of a material and of everything computed from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Units {
    /// Pa, kg/m³, m², Pa·s, m, s.
    Si,
    /// GPa, g/cm³, mm², GPa·µs, mm, µs. Wave speeds are O(1) in these units.
    Scaled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoroelasticMaterial {
    pub name: String,
    pub units: Units,
    /// Solid grain bulk modulus.
    pub ks: f64,
    pub rho_s: f64,
    pub c: Stiffness,
    pub phi: f64,
    pub kappa: [f64; 3],
    pub tortuosity: [f64; 3],
    /// Fluid bulk modulus.
    pub kf: f64,
    pub rho_f: f64,
    pub eta: f64,
}

/// Coefficients derived from raw properties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedCoefficients {
    pub rho: f64,
    pub rho_f: f64,
    pub m: [f64; 3],
    pub beta: [f64; 3],
    pub alpha: [f64; 3],
    /// Biot modulus M.
    pub biot_m: f64,
    pub k_star: f64,
    pub omega_c: f64,
    /// η/κ_i.
    pub resistivity: [f64; 3],
}

impl DerivedCoefficients {
    /// Decay rates of the relative fluid velocity under the dissipative part,
    /// λ_i = −(η/κ_i)·ρ/β_i.
    pub fn decay_rates(&self) -> [f64; 3] {
        std::array::from_fn(|i| -self.resistivity[i] * self.rho / self.beta[i])
    }
}

impl PoroelasticMaterial {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::NonPhysical(format!("{}: {what} = {v}", self.name)));
        for (what, v) in [
            ("K_s", self.ks),
            ("rho_s", self.rho_s),
            ("K_f", self.kf),
            ("rho_f", self.rho_f),
            ("c11", self.c.c11),
            ("c22", self.c.c22),
            ("c33", self.c.c33),
            ("c44", self.c.c44),
            ("c55", self.c.c55),
            ("c66", self.c.c66),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(what, v);
            }
        }
        if !(self.phi > 0.0 && self.phi < 1.0) {
            return bad("phi", self.phi);
        }
        for i in 0..3 {
            if !(self.kappa[i] > 0.0 && self.kappa[i].is_finite()) {
                return bad(&format!("kappa{}", i + 1), self.kappa[i]);
            }
            if !(self.tortuosity[i] >= 1.0) {
                return bad(&format!("T{}", i + 1), self.tortuosity[i]);
            }
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return bad("eta", self.eta);
        }
        Ok(())
    }

    pub fn derive(&self) -> Result<DerivedCoefficients> {
        self.validate()?;
        let c = &self.c;
        let rho = (1.0 - self.phi) * self.rho_s + self.phi * self.rho_f;
        let m: [f64; 3] = std::array::from_fn(|i| self.tortuosity[i] * self.rho_f / self.phi);
        let beta: [f64; 3] = std::array::from_fn(|i| rho * m[i] - self.rho_f * self.rho_f);
        for (i, b) in beta.iter().enumerate() {
            if !(*b > 0.0) {
                return Err(Error::NonPhysical(format!(
                    "{}: beta_{} = rho m_{} - rho_f^2 = {b} <= 0 in direction {}",
                    self.name,
                    i + 1,
                    i + 1,
                    i + 1
                )));
            }
        }
        let rows = [c.c11 + c.c12 + c.c13, c.c12 + c.c22 + c.c23, c.c13 + c.c23 + c.c33];
        let alpha: [f64; 3] = std::array::from_fn(|i| 1.0 - rows[i] / (3.0 * self.ks));
        let k_star = (c.c11 + c.c22 + c.c33 + 2.0 * (c.c12 + c.c13 + c.c23)) / 9.0;
        let biot_m = self.ks / ((1.0 - k_star / self.ks) - self.phi * (1.0 - self.ks / self.kf));
        for (i, a) in alpha.iter().enumerate() {
            if !(*a > 0.0 && *a <= 1.0) {
                return Err(Error::NonPhysical(format!(
                    "{}: Biot coefficient alpha_{} = {a} outside (0, 1]",
                    self.name,
                    i + 1
                )));
            }
        }
        if !(biot_m > 0.0 && biot_m.is_finite()) {
            return Err(Error::NonPhysical(format!("{}: Biot modulus M = {biot_m}", self.name)));
        }
        let omega_c = (0..3)
            .map(|i| self.eta * self.phi / (self.rho_f * self.tortuosity[i] * self.kappa[i]))
            .fold(f64::INFINITY, f64::min);
        Ok(DerivedCoefficients {
            rho,
            rho_f: self.rho_f,
            m,
            beta,
            alpha,
            biot_m,
            k_star,
            omega_c,
            resistivity: std::array::from_fn(|i| self.eta / self.kappa[i]),
        })
    }

    pub fn system(&self) -> Result<SystemMatrices> {
        SystemMatrices::assemble(self, &self.derive()?)
    }

    /// Convert to another unit system.
    pub fn in_units(&self, units: Units) -> Self {
        if units == self.units {
            return self.clone();
        }
        // Factors from SI to scaled.
        let (modulus, density, perm, visc) = (1e-9, 1e-3, 1e6, 1e-3);
        let f = |x: f64, s: f64| if units == Units::Scaled { x * s } else { x / s };
        Self {
            name: self.name.clone(),
            units,
            ks: f(self.ks, modulus),
            rho_s: f(self.rho_s, density),
            c: self.c.scale(if units == Units::Scaled { modulus } else { 1.0 / modulus }),
            phi: self.phi,
            kappa: self.kappa.map(|k| f(k, perm)),
            tortuosity: self.tortuosity,
            kf: f(self.kf, modulus),
            rho_f: f(self.rho_f, density),
            eta: f(self.eta, visc),
        }
    }

    /// Relabel axes 2 and 3, so that a 2D run in the (x1, x2) plane of the
    /// mesh models the physical x–z plane.
    pub fn swap_axes_23(&self) -> Self {
        let c = self.c;
        Self {
            c: Stiffness {
                c11: c.c11,
                c12: c.c13,
                c13: c.c12,
                c22: c.c33,
                c23: c.c23,
                c33: c.c22,
                c44: c.c44,
                c55: c.c66,
                c66: c.c55,
            },
            kappa: [self.kappa[0], self.kappa[2], self.kappa[1]],
            tortuosity: [self.tortuosity[0], self.tortuosity[2], self.tortuosity[1]],
            ..self.clone()
        }
    }

    /// Same material with both densities multiplied by `s`.
    pub fn with_density_scale(&self, s: f64) -> Self {
        Self {
            rho_s: self.rho_s * s,
            rho_f: self.rho_f * s,
            ..self.clone()
        }
    }

    pub fn with_viscosity(&self, eta: f64) -> Self {
        Self { eta, ..self.clone() }
    }

    /// Parse the key-value material format.
    ///
    /// One `key = value [unit]` per line, `#` starts a comment. Missing
    /// transversely isotropic entries default to the symmetry-axis-3
    /// convention used by the presets.
    pub fn parse(text: &str) -> Result<Self> {
        use std::collections::BTreeMap;
        let mut kv: BTreeMap<String, f64> = BTreeMap::new();
        let mut name = String::from("custom");
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| Error::Parse { line: ln + 1, msg };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| perr(format!("expected key = value, got '{line}'")))?;
            let key = k.trim().to_ascii_lowercase();
            let mut parts = v.split_whitespace();
            if key == "name" {
                name = v.trim().to_string();
                continue;
            }
            let num: f64 = parts
                .next()
                .ok_or_else(|| perr("missing value".into()))?
                .parse()
                .map_err(|e| perr(format!("bad number: {e}")))?;
            let factor = match parts.next() {
                None => 1.0,
                Some(u) => unit_factor(u).ok_or_else(|| perr(format!("unknown unit '{u}'")))?,
            };
            const KEYS: [&str; 23] = [
                "ks", "rho_s", "c11", "c12", "c13", "c22", "c23", "c33", "c44", "c55", "c66", "phi",
                "kappa1", "kappa2", "kappa3", "t1", "t2", "t3", "kf", "rho_f", "eta", "kappa", "t",
            ];
            if !KEYS.contains(&key.as_str()) {
                return Err(perr(format!("unknown key '{key}'")));
            }
            kv.insert(key, num * factor);
        }
        let need = |k: &str| kv.get(k).copied().ok_or_else(|| Error::Config(format!("material file missing '{k}'")));
        let c11 = need("c11")?;
        let c12 = need("c12")?;
        let c13 = need("c13")?;
        let c33 = need("c33")?;
        let c55 = need("c55")?;
        let get = |k: &str, d: f64| kv.get(k).copied().unwrap_or(d);
        let c = Stiffness {
            c11,
            c12,
            c13,
            c22: get("c22", c11),
            c23: get("c23", c13),
            c33,
            c44: get("c44", c55),
            c55,
            c66: get("c66", 0.5 * (c11 - c12)),
        };
        let k1 = match kv.get("kappa1").or(kv.get("kappa")) {
            Some(v) => *v,
            None => need("kappa1")?,
        };
        let t1 = kv.get("t1").or(kv.get("t")).copied().unwrap_or(1.0);
        let m = Self {
            name,
            units: Units::Si,
            ks: need("ks")?,
            rho_s: need("rho_s")?,
            c,
            phi: need("phi")?,
            kappa: [k1, get("kappa2", k1), get("kappa3", k1)],
            tortuosity: [t1, get("t2", t1), get("t3", t1)],
            kf: need("kf")?,
            rho_f: need("rho_f")?,
            eta: get("eta", 0.0),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

fn unit_factor(tag: &str) -> Option<f64> {
    Some(match tag {
        "Pa" => 1.0,
        "kPa" => 1e3,
        "MPa" => 1e6,
        "GPa" => 1e9,
        "kg/m3" => 1.0,
        "g/cm3" => 1e3,
        "m2" => 1.0,
        "e-15m2" => 1e-15,
        "D" => 9.869_233e-13,
        "mD" => 9.869_233e-16,
        "Pa.s" | "Pa*s" => 1.0,
        "cP" => 1e-3,
        _ => return None,
    })
}
