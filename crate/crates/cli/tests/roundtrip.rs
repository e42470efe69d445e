use bloch_cli::scenario::{Convention, Estimator, Initial, Lindblad, Operator};
use bloch_cli::{parse_scenario, serialize_scenario, Method, Scenario};
use bloch_core::{GammaProfile, Picture, C64};
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e3..1e3f64, Just(0.0), Just(1.0 / 3.0), -1e-9..1e-9f64]
}

fn gamma() -> impl Strategy<Value = GammaProfile> {
    prop_oneof![
        (0.0..5.0f64).prop_map(GammaProfile::Constant),
        (0.0..5.0f64, 0.1..10.0f64)
            .prop_map(|(gamma0, tau)| GammaProfile::ExponentialDecay { gamma0, tau }),
        prop::collection::vec(0.0..5.0f64, 1..5).prop_map(|values| GammaProfile::Tabulated {
            times: (0..values.len()).map(|i| i as f64 * 0.5).collect(),
            values,
        }),
    ]
}

fn bloch_op(d: usize) -> impl Strategy<Value = Operator> {
    (finite(), prop::collection::vec(finite(), d))
        .prop_map(|(scalar, vector)| Operator::Bloch { scalar, vector })
}

fn hermitian(n: usize) -> impl Strategy<Value = Operator> {
    prop::collection::vec(finite(), n * n).prop_map(move |x| {
        let mut m = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            m[i * n + i] = C64::new(x[i * n + i], 0.0);
            for j in i + 1..n {
                let z = C64::new(x[i * n + j], x[j * n + i]);
                m[i * n + j] = z;
                m[j * n + i] = z.conj();
            }
        }
        Operator::Matrix(m)
    })
}

fn scenario() -> impl Strategy<Value = Scenario> {
    (2usize..4, any::<bool>()).prop_flat_map(|(n, custom)| {
        let d = n * n - 1;
        let op = if custom {
            bloch_op(d).boxed()
        } else {
            prop_oneof![bloch_op(d), hermitian(n)].boxed()
        };
        (
            op.clone(),
            prop::collection::vec(
                (op, gamma()).prop_map(|(operator, gamma)| Lindblad { operator, gamma }),
                0..3,
            ),
            prop::collection::vec(finite(), d),
            (1usize..40, 1usize..5, 1usize..10),
            (
                prop::option::of(0usize..30),
                1usize..64,
                1usize..5000,
                any::<u64>(),
            ),
            any::<bool>(),
        )
            .prop_map(
                move |(
                    h,
                    lindblads,
                    r0,
                    (steps, stride, dt_scale),
                    (order, nodes, m, seed),
                    heis,
                )| {
                    let dt = dt_scale as f64 * 0.01;
                    let convention = if custom {
                        Convention::CustomF(vec![(1, 2, 3, 1.0), (2, 3, 1, 1.0), (3, 1, 2, 1.0)])
                    } else {
                        Convention::Trace2
                    };
                    Scenario {
                        name: format!("case-{n}"),
                        dimension: n,
                        convention,
                        picture: if heis {
                            Picture::Heisenberg
                        } else {
                            Picture::Schroedinger
                        },
                        t_final: (steps * stride) as f64 * dt,
                        dt,
                        stride,
                        method: Method::Formula,
                        initial: Initial::R0(r0),
                        hamiltonian: h,
                        lindblads,
                        order,
                        nodes,
                        trajectories: m,
                        seed,
                        estimator: if custom { Some(Estimator::Bloch) } else { None },
                        compare: vec![],
                    }
                },
            )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn parse_serialize_parse(s in scenario()) {
        // Only custom-f entries consistent in dimension 2 are generated.
        prop_assume!(matches!(s.convention, Convention::Trace2) || s.dimension == 2);
        let text = serialize_scenario(&s);
        let parsed = parse_scenario(&text).map_err(|e| TestCaseError::fail(format!("{e:?}\n{text}")))?;
        prop_assert_eq!(&parsed, &s);
        prop_assert_eq!(serialize_scenario(&parsed), text);
    }
}
