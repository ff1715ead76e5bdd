//! Tabulated rock and fluid properties (SI units).

use super::{PoroelasticMaterial, Stiffness, Units};
use crate::error::{Error, Result};

pub const PRESET_NAMES: [&str; 7] = [
    "sandstone_orthotropic",
    "epoxy_glass",
    "sandstone_isotropic",
    "shale",
    "medium_I",
    "medium_II",
    "medium_III",
];

const GPA: f64 = 1e9;
const PERM: f64 = 1e-15;

/// Permeability assigned to the inviscid comparison media, which do not
/// tabulate one. It only enters through η/κ, which is zero for them.
const INVISCID_PERMEABILITY: f64 = 1e-12;

#[allow(clippy::too_many_arguments)]
fn table1(
    name: &str,
    ks: f64,
    rho_s: f64,
    c: [f64; 5],
    phi: f64,
    kappa13: [f64; 2],
    t13: [f64; 2],
) -> PoroelasticMaterial {
    PoroelasticMaterial {
        name: name.to_string(),
        units: Units::Si,
        ks: ks * GPA,
        rho_s,
        c: Stiffness::transversely_isotropic(c[0] * GPA, c[1] * GPA, c[2] * GPA, c[3] * GPA, c[4] * GPA),
        phi,
        kappa: [kappa13[0] * PERM, kappa13[0] * PERM, kappa13[1] * PERM],
        tortuosity: [t13[0], t13[0], t13[1]],
        kf: 2.5 * GPA,
        rho_f: 1040.0,
        eta: 1e-3,
    }
}

fn table2(name: &str, rho_s: f64, rho_f: f64, phi: f64, ks: f64, kf: f64, k_fr: f64, mu_fr: f64) -> PoroelasticMaterial {
    PoroelasticMaterial {
        name: name.to_string(),
        units: Units::Si,
        ks: ks * GPA,
        rho_s,
        c: Stiffness::isotropic(k_fr * GPA, mu_fr * GPA),
        phi,
        kappa: [INVISCID_PERMEABILITY; 3],
        tortuosity: [2.0; 3],
        kf: kf * GPA,
        rho_f,
        eta: 0.0,
    }
}

pub fn preset(name: &str) -> Result<PoroelasticMaterial> {
    Ok(match name {
        "sandstone_orthotropic" => table1(name, 80.0, 2500.0, [71.8, 3.2, 1.2, 53.4, 26.1], 0.2, [600.0, 100.0], [2.0, 3.6]),
        "epoxy_glass" => table1(name, 40.0, 1815.0, [39.4, 1.2, 1.2, 13.1, 3.0], 0.2, [600.0, 100.0], [2.0, 3.6]),
        "sandstone_isotropic" => table1(name, 40.0, 2500.0, [36.0, 12.0, 12.0, 36.0, 12.0], 0.2, [600.0, 600.0], [2.0, 2.0]),
        "shale" => table1(name, 7.6, 2210.0, [11.9, 3.96, 3.96, 11.9, 3.96], 0.16, [100.0, 100.0], [2.0, 2.0]),
        "medium_I" => table2(name, 2650.0, 880.0, 0.1, 12.2, 1.985, 9.6, 5.1),
        "medium_II" => table2(name, 2200.0, 950.0, 0.4, 6.9, 2.0, 6.7, 3.0),
        "medium_III" => table2(name, 2650.0, 750.0, 0.2, 6.9, 2.0, 6.7, 3.0),
        _ => {
            return Err(Error::Config(format!(
                "unknown material '{name}'; available: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    })
}

pub fn all_presets() -> Vec<PoroelasticMaterial> {
    PRESET_NAMES.iter().map(|n| preset(n).expect("registered preset")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_values() {
        let s = preset("sandstone_orthotropic").unwrap();
        assert_eq!(s.c.c11, 71.8e9);
        assert_eq!(s.kappa[2], 100e-15);
        let e = preset("epoxy_glass").unwrap();
        assert_eq!(e.c.c33, 13.1e9);
        assert_eq!(e.rho_s, 1815.0);
        let m = preset("medium_II").unwrap();
        assert_eq!(m.phi, 0.4);
        assert!((m.c.c55 - 3.0e9).abs() < 1e-3);
        assert!((m.c.c11 - (6.7e9 + 4.0e9)).abs() < 1e-3);
        assert!((m.c.c12 - (6.7e9 - 2.0e9)).abs() < 1e-3);
    }

    #[test]
    fn unknown_lists_names() {
        let err = preset("granite").unwrap_err().to_string();
        assert!(err.contains("medium_III") && err.contains("shale"));
    }

    #[test]
    fn all_presets_derive() {
        for m in all_presets() {
            m.derive().unwrap();
        }
    }
}
