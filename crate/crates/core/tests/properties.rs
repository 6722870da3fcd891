use proptest::prelude::*;
use sobdde::analysis::{check_translation_bound, PiecewiseConstant};
use sobdde::rhs::{parse_expr, Arg, Builtin, Matrix};
use sobdde::{
    propagate_sensitivity, solve, GridFunction, PNorm, RhsModel, SensitivityDirection, SolveConfig,
    VecNorm,
};

fn grid_function() -> impl Strategy<Value = GridFunction> {
    (-3.0..0.0f64, 0.1..4.0f64, 1usize..40, 1usize..4).prop_flat_map(|(a, len, m, d)| {
        prop::collection::vec(-5.0..5.0f64, (m + 1) * d)
            .prop_map(move |values| GridFunction::new(a, a + len, d, values).unwrap())
    })
}

fn p_norm() -> impl Strategy<Value = PNorm> {
    (
        prop::sample::select(vec![1.0, 1.5, 2.0, 3.0]),
        prop::sample::select(vec![VecNorm::L1, VecNorm::L2, VecNorm::Linf]),
    )
        .prop_map(|(p, v)| PNorm::new(p, v).unwrap())
}

fn expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x1".to_string()),
        Just("x2".to_string()),
        Just("y1".to_string()),
        Just("y2".to_string()),
        (0.0..10.0f64).prop_map(|c| format!("{c:.3}")),
    ];
    leaf.prop_recursive(4, 32, 2, |inner| {
        prop_oneof![
            (
                inner.clone(),
                prop::sample::select(vec!["+", "-", "*", "/", "^"]),
                inner.clone()
            )
                .prop_map(|(a, op, b)| format!("({a}) {op} ({b})")),
            inner.clone().prop_map(|a| format!("-({a})")),
            (
                prop::sample::select(vec!["sin", "cos", "exp", "tanh", "abs"]),
                inner
            )
                .prop_map(|(f, a)| format!("{f}({a})")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn slopes_integrate_back_to_values(x in grid_function()) {
        let h = x.step();
        let mut acc = x.node(0).to_vec();
        for k in 0..x.segments() {
            let d = x.derivative_at(x.node_time(k) + 0.5 * h).unwrap();
            for (a, s) in acc.iter_mut().zip(&d) {
                *a += h * s;
            }
            for (a, v) in acc.iter().zip(x.node(k + 1)) {
                prop_assert!((a - v).abs() <= 1e-11 * (1.0 + v.abs()) * (k + 1) as f64);
            }
        }
    }

    #[test]
    fn norm_is_a_norm(x in grid_function(), y in grid_function(), nrm in p_norm(), c in -3.0..3.0f64) {
        let y = GridFunction::new(x.a(), x.b(), x.dim(), y.resample(x.segments()).unwrap().values()[..].iter()
            .copied().cycle().take(x.values().len()).collect()).unwrap();
        let sum = GridFunction::combine(1.0, &x, 1.0, &y).unwrap();
        prop_assert!(sum.w1p_norm(&nrm) <= (x.w1p_norm(&nrm) + y.w1p_norm(&nrm)) * (1.0 + 1e-12));
        let scaled = x.scaled(c).w1p_norm(&nrm);
        prop_assert!((scaled - c.abs() * x.w1p_norm(&nrm)).abs() <= 1e-12 * (1.0 + scaled));
    }

    #[test]
    fn norm_equivalence_holds(x in grid_function(), nrm in p_norm()) {
        let (low, high) = x.norm_equivalence_bounds(&nrm);
        prop_assert!(low && high);
    }

    #[test]
    fn json_round_trip(x in grid_function()) {
        let text = serde_json::to_string(&x).unwrap();
        let back: GridFunction = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, x);
    }

    #[test]
    fn history_at_zero_is_the_restriction(x in grid_function(), lag_frac in 0.1..1.0f64) {
        let lag_steps = ((x.segments() as f64 * lag_frac).ceil() as usize).max(1);
        let lag = lag_steps as f64 * x.step();
        // shift x so that the history interval [-lag, 0] starts at x.a()
        let tail = (x.segments() - lag_steps) as f64 * x.step();
        let shifted = GridFunction::new(-lag, tail, x.dim(), x.values().to_vec()).unwrap();
        let hist = shifted.history_at(0.0).unwrap();
        prop_assert_eq!(hist, shifted.restrict(-lag, 0.0).unwrap());
    }

    #[test]
    fn prolongation_is_an_isometry(x in grid_function(), extra in 1usize..50, nrm in p_norm()) {
        let phi = GridFunction::new(-(x.b() - x.a()), 0.0, x.dim(), x.values().to_vec()).unwrap();
        let bar = phi.static_prolongation(extra as f64 * phi.step()).unwrap();
        let (a, b) = (phi.w1p_norm(&nrm), bar.w1p_norm(&nrm));
        prop_assert!((a - b).abs() <= 1e-14 * a.max(1e-300));
    }

    #[test]
    fn expressions_reprint_to_the_same_tree(src in expr()) {
        let ast = parse_expr(&src, 2).unwrap();
        let printed = ast.to_string();
        prop_assert_eq!(parse_expr(&printed, 2).unwrap(), ast);
    }

    #[test]
    fn translation_bound_never_fails(seed in any::<u64>(), s in -1.0..1.0f64, t in -1.0..1.0f64,
                                     p in prop::sample::select(vec![1.0, 1.5, 2.0, 3.0])) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let g = PiecewiseConstant::random(&mut rng, 7);
        let r = check_translation_bound(&g, -1.5, 1.5, s, t, p);
        prop_assert!(r.passed, "{:?}", r);
    }

    #[test]
    fn builtin_jacobians_match_differences(u in prop::collection::vec(-1.0..1.0f64, 2),
                                           v in prop::collection::vec(-1.0..1.0f64, 2)) {
        let models = [
            Builtin::Linear {
                a: Matrix::from_rows(&[vec![1.0, 2.0], vec![-0.5, 0.3]]).unwrap(),
                b: Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap(),
            },
            Builtin::PureDelay { a: -0.7, dim: 2 },
            Builtin::Logistic { dim: 2 },
            Builtin::MackeyGlass { beta: 2.0, gamma: 1.0, n: 10.0, dim: 2 },
            Builtin::Ikeda { mu: 1.5, dim: 2 },
        ];
        for b in models {
            let m = RhsModel::builtin(b);
            for arg in [Arg::Current, Arg::Delayed] {
                let exact = m.jacobian(&u, &v, arg).unwrap();
                // independent central differences
                let step = 1e-6;
                for j in 0..2 {
                    let (mut up, mut dn) = ((u.clone(), v.clone()), (u.clone(), v.clone()));
                    match arg {
                        Arg::Current => { up.0[j] += step; dn.0[j] -= step; }
                        Arg::Delayed => { up.1[j] += step; dn.1[j] -= step; }
                    }
                    let fu = m.eval(&up.0, &up.1).unwrap();
                    let fd = m.eval(&dn.0, &dn.1).unwrap();
                    for i in 0..2 {
                        let approx = (fu[i] - fd[i]) / (2.0 * step);
                        prop_assert!((exact.as_slice()[i * 2 + j] - approx).abs() <= 1e-5,
                            "{} {:?} ({i},{j})", m.label(), arg);
                    }
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sensitivity_is_linear_in_the_direction(c0 in -1.0..1.0f64, c1 in -2.0..2.0f64, xi in -1.0..1.0f64,
                                              alpha in -3.0..3.0f64) {
        let phi = GridFunction::from_fn(-1.0, 0.0, 200, 1, |t, o| o[0] = 0.5 + 0.1 * t).unwrap();
        let m = RhsModel::builtin(Builtin::Logistic { dim: 1 });
        let cfg = SolveConfig::new(5e-3, 1.0).with_p_norm(PNorm::new(1.0, VecNorm::L2).unwrap());
        let res = solve(&phi, 0.4, &m, &cfg).unwrap();
        let chi = GridFunction::from_fn(-1.0, 0.0, 200, 1, |t, o| o[0] = c0 + c1 * t * t).unwrap();
        let dir = SensitivityDirection { chi: chi.clone(), xi };
        let scaled = SensitivityDirection { chi: chi.scaled(alpha), xi: alpha * xi };
        let a = propagate_sensitivity(&res, &phi, 0.4, &m, &dir, &cfg).unwrap().dx;
        let b = propagate_sensitivity(&res, &phi, 0.4, &m, &scaled, &cfg).unwrap().dx;
        let diff = GridFunction::combine(alpha, &a, -1.0, &b).unwrap().w1p_norm(&cfg.p_norm);
        prop_assert!(diff <= 1e-10 * (1.0 + b.w1p_norm(&cfg.p_norm)));
    }

    #[test]
    fn longer_solves_extend_shorter_ones(t1 in 1usize..40, extra in 1usize..40) {
        let phi = GridFunction::from_fn(-1.0, 0.0, 100, 1, |t, o| o[0] = (2.0 * t).cos()).unwrap();
        let m = RhsModel::builtin(Builtin::Ikeda { mu: 1.5, dim: 1 });
        let h = 1e-2;
        let short = solve(&phi, 0.7, &m, &SolveConfig::new(h, t1 as f64 * 0.05)).unwrap().trajectory;
        let long = solve(&phi, 0.7, &m, &SolveConfig::new(h, (t1 + extra) as f64 * 0.05)).unwrap().trajectory;
        for k in 0..=short.segments() {
            prop_assert!((short.node(k)[0] - long.node(k)[0]).abs() <= 1e-9);
        }
    }
}
