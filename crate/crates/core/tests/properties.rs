//! Property-based checks for the coordinate transforms and the dual
//! gauge freedom.

use proptest::prelude::*;

use biref_core::grid::CostMatrix;
use biref_core::optics::{
    rho_from_hat, rho_hat, z_from_tilde, z_tilde, Direction, OpticalConfig, TargetPoint,
};
use biref_core::transport::{objective_f, tighten_potentials, DualPotentials};

fn e0_cfg() -> OpticalConfig {
    OpticalConfig::new(8.0, 3.0, 0.0).unwrap()
}

proptest! {
    #[test]
    fn z_transform_roundtrips(z in -3.0f64..3.0, px in -1.0f64..1.0, py in -1.0f64..1.0) {
        let cfg = e0_cfg();
        let x = TargetPoint::new([px, py]);
        let zt = z_tilde(z, &x, &cfg);
        let back = z_from_tilde(zt, &x, &cfg);
        prop_assert!((back - z).abs() < 1e-12 * z.abs().max(1.0));
    }

    #[test]
    fn rho_transform_roundtrips(rho in 0.5f64..7.0, mz in -0.5f64..0.5, phi in 0.0f64..6.28) {
        let cfg = e0_cfg();
        let m = Direction::from_band(mz, phi);
        let rh = rho_hat(rho, &m, &cfg);
        let back = rho_from_hat(rh, &m, &cfg).unwrap();
        prop_assert!((back - rho).abs() < 1e-12 * rho);
    }

    #[test]
    fn gauge_shift_preserves_objective_and_tightening(
        shift in -5.0f64..5.0,
        seed in 0u64..1000,
    ) {
        // random feasible potentials on a small instance: shifting r by a
        // constant and zeta by its negative changes neither the objective
        // nor the tightened potentials after re-gauging
        let mut state = seed.wrapping_mul(2654435761).wrapping_add(1);
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 33) as f64 / (1u64 << 31) as f64) * 2.0 - 1.0
        };
        let (m, n) = (3usize, 4usize);
        let c: Vec<f64> = (0..m * n).map(|_| rnd() * 3.0).collect();
        let cost = CostMatrix::from_rows(m, n, c).unwrap();
        let r: Vec<f64> = (0..m).map(|_| rnd()).collect();
        // feasible zeta: the c-transform of r is the tightest choice
        let zeta: Vec<f64> = (0..n)
            .map(|j| (0..m).map(|i| cost.at(i, j) - r[i]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let w = vec![1.0; m];
        let v = vec![m as f64 / n as f64; n];

        let pot = DualPotentials { r: r.clone(), zeta: zeta.clone(), gauge_node: 0 };
        let shifted = DualPotentials {
            r: r.iter().map(|ri| ri + shift).collect(),
            zeta: zeta.iter().map(|zj| zj - shift).collect(),
            gauge_node: 0,
        };
        prop_assert!((objective_f(&pot, &w, &v) - objective_f(&shifted, &w, &v)).abs() < 1e-9);

        let t1 = tighten_potentials(&pot, &cost);
        let t2 = tighten_potentials(&shifted, &cost);
        for i in 0..m {
            prop_assert!((t1.r[i] - (t2.r[i] - shift)).abs() < 1e-9);
        }
        for j in 0..n {
            prop_assert!((t1.zeta[j] - (t2.zeta[j] + shift)).abs() < 1e-9);
        }
    }
}
