//! Invariants over randomly drawn inputs.

use std::sync::{Arc, OnceLock};

use dualflow_core::constants::ConstantsTable;
use dualflow_core::logflow::{loghls_deficit, onofri_deficit, MassOneDensity, OnofriInput};
use dualflow_core::profiles::{bump, ProfileSpec};
use dualflow_core::radial::{dirichlet_energy_with_tail, io, make_grid, RadialField, RadialGrid, Spacing, TailModel};
use dualflow_core::suite::{explicit_gap_terms, perturbation_family, sobolev_deficit, Perturbation, Tolerances};
use proptest::prelude::*;

fn grid(d: usize) -> Arc<RadialGrid> {
    static GRIDS: OnceLock<Vec<Arc<RadialGrid>>> = OnceLock::new();
    GRIDS.get_or_init(|| (2..=6).map(|d| make_grid(d, 1e6, 4096, Spacing::LogStretched).unwrap()).collect())[d - 2]
        .clone()
}

fn table() -> &'static ConstantsTable {
    static TABLE: OnceLock<ConstantsTable> = OnceLock::new();
    TABLE.get_or_init(ConstantsTable::default)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn field_files_round_trip_bit_exactly(values in prop::collection::vec(-1e300f64..1e300, 16..64), d in 2usize..7) {
        let g = make_grid(d, 10.0, values.len(), Spacing::Uniform).unwrap();
        let f = RadialField::new(g, values).unwrap();
        let back = io::parse_field(&io::field_to_string(&f)).unwrap();
        prop_assert_eq!(back.values(), f.values());
        prop_assert_eq!(back.grid().nodes(), f.grid().nodes());
    }

    #[test]
    fn profile_specs_round_trip(t_final in 0.1f64..10.0, frac in 0.0f64..0.9, lambda in 0.1f64..10.0) {
        let spec = ProfileSpec::separated(t_final, frac * t_final).with_lambda(lambda);
        let back: ProfileSpec = spec.to_string().parse().unwrap();
        prop_assert_eq!(back, spec);
    }

    #[test]
    fn sobolev_deficit_is_nonnegative(eps in -0.3f64..3.0, r0 in 0.0f64..4.0, d in 3usize..=6) {
        let s = table().sobolev(d).unwrap();
        let w = Perturbation { eps, r0 }.field(&grid(d)).unwrap();
        let deficit = sobolev_deficit(&w, s).unwrap();
        let scale = s * dirichlet_energy_with_tail(&w, TailModel::Fitted).unwrap();
        prop_assert!(deficit >= -1e-9 * scale, "deficit {deficit}");
    }

    #[test]
    fn explicit_gap_bound_holds(eps in -0.3f64..3.0, r0 in 0.0f64..4.0, d in 5usize..=6) {
        let s = table().sobolev(d).unwrap();
        let w = Perturbation { eps, r0 }.field(&grid(d)).unwrap();
        let t = explicit_gap_terms(&w, s, 1e-5).unwrap();
        prop_assert!(t.lhs <= t.rhs + 1e-5 * t.scale, "lhs {} rhs {}", t.lhs, t.rhs);
        if let Some(ratio) = t.ratio {
            prop_assert!(ratio <= t.constant, "ratio {ratio} constant {}", t.constant);
        }
    }

    #[test]
    fn onofri_deficit_is_nonnegative(a in -2.0f64..2.0, r0 in 0.0f64..2.0) {
        let g = RadialField::from_fn(grid(2), |r| a * bump(r, r0)).unwrap();
        let deficit = onofri_deficit(&OnofriInput::new(g).unwrap());
        prop_assert!(deficit >= -1e-9, "deficit {deficit}");
    }

    #[test]
    fn loghls_deficit_is_nonnegative(a in -2.0f64..2.0, r0 in 0.0f64..2.0) {
        let g = RadialField::from_fn(grid(2), |r| a * bump(r, r0)).unwrap();
        let v = MassOneDensity::perturbed_moon(&g).unwrap();
        let deficit = loghls_deficit(v.field(), 1.0).unwrap();
        prop_assert!(deficit >= -1e-7, "deficit {deficit}");
    }

    #[test]
    fn families_depend_only_on_the_seed(seed in any::<u64>(), extra in 0usize..16) {
        let a = perturbation_family(seed, extra);
        prop_assert_eq!(&a, &perturbation_family(seed, extra));
        prop_assert_eq!(a.len(), 25 + extra);
        prop_assert!(a.iter().all(|p| (-0.3..=3.0).contains(&p.eps) && (0.0..=4.0).contains(&p.r0)));
    }

    #[test]
    fn tolerances_reject_negative_values(v in -1e3f64..-1e-300) {
        let mut t = Tolerances::default();
        prop_assert!(t.set("kappa", v).is_err());
        prop_assert!(t.set("kappa", -v).is_ok());
    }
}
