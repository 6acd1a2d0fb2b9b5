//! Built-in parameter sets and computational domains of the four test problems.

use crate::model::{Domain, HestonParams, OptionKind};
use crate::scalar::Real;

/// European call parameters with Dirichlet data on every side.
pub fn table1_params<T: Real>(strike: f64) -> HestonParams<T> {
    HestonParams {
        kappa: T::lit(1.0),
        theta: T::lit(0.09),
        sigma: T::lit(0.4),
        rho: T::lit(-0.7),
        r_d: T::lit(0.05),
        r_f: T::lit(0.01),
        maturity: T::lit(1.0),
        strike: T::lit(strike),
        spot: T::lit(100.0),
        v0: T::lit(0.25),
    }
}

/// `[0, 4] x [-2, 2]`.
pub fn table1_domain<T: Real>() -> Domain<T> {
    Domain {
        v_min: T::zero(),
        v_max: T::lit(4.0),
        x_min: T::lit(-2.0),
        x_max: T::lit(2.0),
    }
}

/// Strikes of the call comparison table.
pub const TABLE2_STRIKES: [f64; 5] = [105.0, 110.0, 115.0, 130.0, 150.0];

/// Closed-form prices printed next to [`TABLE2_STRIKES`].
pub const TABLE2_CLOSED_FORM: [f64; 5] = [15.938, 13.857, 11.979, 7.483, 3.701];

/// Relative SIPG errors printed for linear elements.
pub const TABLE2_SIPG_LINEAR: [f64; 5] = [1.79e-4, 1.79e-3, 5.16e-4, 1.56e-3, 5.42e-4];

/// Relative SIPG errors printed for quadratic elements.
pub const TABLE2_SIPG_QUADRATIC: [f64; 5] = [5.33e-5, 5.25e-5, 1.26e-4, 2.05e-4, 1.99e-4];

/// Convection-dominated call. The foreign rate is `ln(100)`; spot and
/// initial variance are not part of the published set and default to the
/// strike and the long-run variance.
pub fn table3_params<T: Real>() -> HestonParams<T> {
    let k = 123.4;
    HestonParams {
        kappa: T::lit(1.98937),
        theta: T::lit(0.011876),
        sigma: T::lit(0.33147),
        rho: T::lit(0.0258519),
        r_d: T::lit(1.0005_f64.ln()),
        r_f: T::lit(100.0_f64.ln()),
        maturity: T::lit(0.25),
        strike: T::lit(k),
        spot: T::lit(k),
        v0: T::lit(0.011876),
    }
}

/// Log-spot bounds of the convection-dominated problem.
pub const CONVECTION_LOG_SPOT: (f64, f64) = (2.990790, 6.640072);

/// `(0.0025, 0.559951)` in `v`; the published log-spot interval shifted to
/// log-moneyness by `ln K`.
pub fn convection_domain<T: Real>() -> Domain<T> {
    let ln_k = 123.4_f64.ln();
    Domain {
        v_min: T::lit(0.0025),
        v_max: T::lit(0.559951),
        x_min: T::lit(CONVECTION_LOG_SPOT.0 - ln_k),
        x_max: T::lit(CONVECTION_LOG_SPOT.1 - ln_k),
    }
}

/// Digital and butterfly parameters.
pub fn table4_params<T: Real>() -> HestonParams<T> {
    HestonParams {
        kappa: T::lit(2.5),
        theta: T::lit(0.06),
        sigma: T::lit(0.5),
        rho: T::lit(-0.1),
        r_d: T::lit(1.052_f64.ln()),
        r_f: T::lit(1.048_f64.ln()),
        maturity: T::lit(0.25),
        strike: T::lit(1.0),
        spot: T::lit(1.0),
        v0: T::lit(0.05225),
    }
}

/// `(0.0025, 0.559951) x (-5, 5)`.
pub fn exotic_domain<T: Real>() -> Domain<T> {
    Domain {
        v_min: T::lit(0.0025),
        v_max: T::lit(0.559951),
        x_min: T::lit(-5.0),
        x_max: T::lit(5.0),
    }
}

/// Butterfly with strikes 0.1, 0.5, 0.9; `x = ln(S/K2)`.
pub fn butterfly_kind<T: Real>() -> OptionKind<T> {
    OptionKind::Butterfly {
        k1: T::lit(0.1),
        k2: T::lit(0.5),
        k3: T::lit(0.9),
    }
}

/// Table-4 parameters re-centred on the middle butterfly strike.
pub fn butterfly_params<T: Real>() -> HestonParams<T> {
    let mut p = table4_params::<T>();
    p.strike = T::lit(0.5);
    p.spot = T::lit(0.5);
    p
}

/// Semi-analytic digital price quoted for the digital example.
pub const DIGITAL_REFERENCE: f64 = 0.483827;

/// Meshes `(N_v, N_x)` of the digital comparison and the printed values
/// `(CN value, CN rel. error, Rannacher value, Rannacher rel. error)`.
pub const TABLE5_ROWS: [((usize, usize), (f64, f64, f64, f64)); 4] = [
    ((8, 16), (0.524935, 8.50e-2, 0.524910, 8.49e-2)),
    ((16, 64), (0.494234, 2.15e-2, 0.496226, 2.56e-2)),
    ((32, 128), (0.368798, 2.38e-1, 0.484065, 4.93e-4)),
    ((64, 256), (0.554879, 1.47e-1, 0.483568, 5.34e-4)),
];

/// Cell counts `(n_v, n_x)` giving the requested spacings on a domain.
pub fn cells_for_spacing<T: Real>(d: &Domain<T>, dv: f64, dx: f64) -> (usize, usize) {
    let nv = ((d.v_max - d.v_min).as_f64() / dv).round().max(1.0) as usize;
    let nx = ((d.x_max - d.x_min).as_f64() / dx).round().max(1.0) as usize;
    (nv, nx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        table1_params::<f64>(105.0).validate().unwrap();
        table3_params::<f64>().validate().unwrap();
        table4_params::<f64>().validate().unwrap();
        butterfly_params::<f64>().validate().unwrap();
        for d in [table1_domain::<f64>(), convection_domain(), exotic_domain()] {
            d.validate().unwrap();
        }
    }

    #[test]
    fn convection_domain_is_centred_on_the_strike() {
        let d = convection_domain::<f64>();
        assert!((d.x_min + d.x_max).abs() < 1e-5);
    }

    #[test]
    fn spacing_to_cells() {
        assert_eq!(cells_for_spacing(&table1_domain::<f64>(), 0.0625, 0.0625), (64, 64));
        assert_eq!(cells_for_spacing(&exotic_domain::<f64>(), 0.016, 0.078), (35, 128));
    }
}
