use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;

use crow_entangle::biphoton::{biphoton_full, biphoton_linearized, build_grid, PumpConfig};
use crow_entangle::config::parse_config;
use crow_entangle::dispersion::{complex_frequency, group_velocity, quality_factor, CrowParams};
use crow_entangle::evolution::{
    cavity_sample, photon_number, AnomalousSign, CorrelatorSet,
};
use crow_entangle::schmidt::{reconstruct, schmidt_decompose};
use crow_entangle::svd::svd;

fn frob(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn matrix(m: usize, n: usize) -> impl Strategy<Value = Array2<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), m * n).prop_map(move |v| {
        Array2::from_shape_vec((m, n), v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
            .unwrap()
    })
}

fn pump() -> impl Strategy<Value = PumpConfig> {
    (0.2f64..0.8, 0.1f64..0.5, 0.1f64..0.5, 0.5f64..3.0)
        .prop_map(|(k, sp, sm, b)| PumpConfig::new(k * PI, sp, sm, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn svd_reconstructs(a in (1usize..14, 1usize..14).prop_flat_map(|(m, n)| matrix(m, n))) {
        let s = svd(&a).unwrap();
        let rec = s.reconstruct();
        prop_assert!(frob(&(rec - &a)) <= 1e-10 * frob(&a).max(1e-300));
        prop_assert!(s.d.windows(2).all(|w| w[0] >= w[1] - 1e-12 * s.d[0]));
        prop_assert!(s.d.iter().all(|&d| d >= 0.0));
    }

    #[test]
    fn svd_random_square(a in matrix(9, 9)) {
        let s = svd(&a).unwrap();
        prop_assert!(frob(&(s.reconstruct() - &a)) <= 1e-10 * frob(&a));
        let f2: f64 = s.d.iter().map(|d| d * d).sum();
        prop_assert!((f2 - frob(&a).powi(2)).abs() <= 1e-10 * f2);
    }

    #[test]
    fn biphoton_normalized_and_symmetric(p in pump(), n_half in 4usize..48) {
        let g = build_grid(n_half).unwrap();
        for phi in [biphoton_full(&g, &p).unwrap(), biphoton_linearized(&g, &p).unwrap()] {
            prop_assert!((phi.norm_sq() - 1.0).abs() < 1e-12);
        }
        let phi = biphoton_full(&g, &p).unwrap();
        for i in 0..n_half {
            for j in 0..n_half {
                prop_assert_eq!(phi.values[[i, j]], phi.values[[j, i]]);
            }
        }
    }

    #[test]
    fn schmidt_weights_and_reconstruction(p in pump()) {
        let g = build_grid(40).unwrap();
        let phi = biphoton_full(&g, &p).unwrap();
        let dec = schmidt_decompose(&phi, p.beta).unwrap();
        prop_assert!((dec.p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!(frob(&(reconstruct(&dec) - &phi.values)) < 1e-10);
        for (r, w) in dec.r.iter().zip(&dec.p) {
            prop_assert!((r - p.beta * w.sqrt()).abs() < 1e-12 * p.beta);
        }
    }

    #[test]
    fn q_mirror_and_monotone(k in 0.0f64..PI, dk in 1e-3f64..0.5) {
        let c = CrowParams::reference();
        let q = quality_factor(&c, k).unwrap();
        prop_assert!((q - quality_factor(&c, -k).unwrap()).abs() <= 1e-12 * q);
        if k + dk <= PI {
            prop_assert!(quality_factor(&c, k + dk).unwrap() < q);
        }
        prop_assert!(complex_frequency(&c, k).unwrap().im < 0.0);
        prop_assert!(group_velocity(&c, k).unwrap() >= 0.0);
    }

    #[test]
    fn correlation_variance_bounds(p in pump(), t in 0.0f64..60.0, cav in 1i64..30) {
        let g = build_grid(32).unwrap();
        let dec = schmidt_decompose(&biphoton_full(&g, &p).unwrap(), p.beta).unwrap();
        let corr = CorrelatorSet::assemble(&dec, AnomalousSign::Plus).unwrap();
        let params = CrowParams::reference();
        let s = cavity_sample(&corr, &params, cav, -cav, t).unwrap();
        prop_assert!(s.n_p >= 0.0);
        prop_assert!(s.envelope() <= s.variance(0.3) + 1e-12);
        prop_assert!((s.n_p - photon_number(&corr, &params, -cav, t).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn config_rejects_nonpositive_widths(x in -5.0f64..=0.0) {
        let err = parse_config(&format!("pump.sigma_minus_D = {x}")).unwrap_err();
        prop_assert!(err.is_validation());
        prop_assert!(err.to_string().contains("pump.sigma_minus_D"));
    }
}
