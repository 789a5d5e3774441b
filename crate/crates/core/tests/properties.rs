//! Property tests for the simulator, the code and the estimators.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use shor_teleport::estimate::{exact_observables, Engine, Estimates, Problem};
use shor_teleport::noise::NoiseSpec;
use shor_teleport::protocol::{prepare_resource_circuit, teleport_branch, BellState, InputState, ResourceState};
use shor_teleport::shor::{encode_logical, standard};
use shor_teleport::sim::{Complex64, Gate, Pauli, PauliString, StateVector};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn state_strategy(max_qubits: usize) -> impl Strategy<Value = StateVector> {
    (1..=max_qubits).prop_flat_map(|n| prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n)).prop_filter_map(
        "zero vector",
        |v| {
            let amps: Vec<Complex64> = v.into_iter().map(|(a, b)| c(a, b)).collect();
            StateVector::from_unnormalized(amps).ok()
        },
    )
}

fn letter() -> impl Strategy<Value = Pauli> {
    prop_oneof![Just(Pauli::I), Just(Pauli::X), Just(Pauli::Y), Just(Pauli::Z)]
}

fn pauli_strategy(n: usize) -> impl Strategy<Value = PauliString> {
    prop::collection::vec(letter(), n).prop_map(|l| PauliString::from_letters(&l).unwrap())
}

fn gate_strategy(n: usize) -> impl Strategy<Value = Gate> {
    let q = 0..n;
    prop_oneof![
        q.clone().prop_map(Gate::H),
        q.clone().prop_map(Gate::X),
        q.clone().prop_map(Gate::Y),
        q.clone().prop_map(Gate::Z),
        q.clone().prop_map(Gate::S),
        q.clone().prop_map(Gate::T),
        (q.clone(), -7.0f64..7.0).prop_map(|(q, a)| Gate::Rz(q, a)),
        (q.clone(), 1..n).prop_map(move |(a, d)| Gate::Cnot { control: a, target: (a + d) % n }),
    ]
}

fn matmul(a: &[Complex64], b: &[Complex64], d: usize) -> Vec<Complex64> {
    let mut out = vec![c(0.0, 0.0); d * d];
    for i in 0..d {
        for k in 0..d {
            if a[i * d + k] == c(0.0, 0.0) {
                continue;
            }
            for j in 0..d {
                out[i * d + j] += a[i * d + k] * b[k * d + j];
            }
        }
    }
    out
}

fn dense_expectation(state: &StateVector, m: &[Complex64]) -> Complex64 {
    let a = state.amplitudes();
    let d = a.len();
    let mut s = c(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            s += a[i].conj() * m[i * d + j] * a[j];
        }
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gates_preserve_norm(
        (state, gates) in (2usize..=4).prop_flat_map(|n| {
            let amps = prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n);
            (amps, prop::collection::vec(gate_strategy(n), 0..12))
        }).prop_filter_map("zero vector", |(v, g)| {
            StateVector::from_unnormalized(v.into_iter().map(|(a, b)| c(a, b)).collect()).ok().map(|s| (s, g))
        })
    ) {
        let mut s = state;
        for g in &gates {
            s.apply_gate(g).unwrap();
        }
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn pauli_product_matches_dense(
        (a, b) in (1usize..=3).prop_flat_map(|n| (pauli_strategy(n), pauli_strategy(n)))
    ) {
        let d = 1 << a.num_qubits();
        let prod = a.mul(&b).unwrap().to_dense();
        let dense = matmul(&a.to_dense(), &b.to_dense(), d);
        for (x, y) in prod.iter().zip(&dense) {
            prop_assert!((x - y).norm() < 1e-12);
        }
        let ab = matmul(&a.to_dense(), &b.to_dense(), d);
        let ba = matmul(&b.to_dense(), &a.to_dense(), d);
        let commute = ab.iter().zip(&ba).all(|(x, y)| (x - y).norm() < 1e-12);
        prop_assert_eq!(commute, a.commutes_with(&b));
    }

    #[test]
    fn expectation_is_bounded_and_matches_dense(
        (state, p) in state_strategy(4).prop_flat_map(|s| {
            let n = s.num_qubits();
            (Just(s), pauli_strategy(n))
        })
    ) {
        let e = state.expectation(&p).unwrap();
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&e));
        let dense = dense_expectation(&state, &p.to_dense());
        prop_assert!((dense.re - e).abs() < 1e-10 && dense.im.abs() < 1e-10);
    }

    #[test]
    fn parse_display_round_trip(p in (1usize..=12).prop_flat_map(pauli_strategy), k in 0u8..4) {
        let p = (0..k).fold(p, |p, _| p.scale_i());
        let back: PauliString = p.to_string().parse().unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn tensor_factorizes(
        (a, pa) in state_strategy(2).prop_flat_map(|s| { let n = s.num_qubits(); (Just(s), pauli_strategy(n)) }),
        (b, pb) in state_strategy(2).prop_flat_map(|s| { let n = s.num_qubits(); (Just(s), pauli_strategy(n)) }),
    ) {
        let ab = a.tensor(&b).unwrap();
        prop_assert!((ab.norm_sqr() - 1.0).abs() < 1e-10);
        let joint = pa.tensor(&pb).unwrap();
        let lhs = ab.expectation(&joint).unwrap();
        let rhs = a.expectation(&pa).unwrap() * b.expectation(&pb).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn projections_split_probability(
        (state, p) in state_strategy(3).prop_flat_map(|s| {
            let n = s.num_qubits();
            (Just(s), pauli_strategy(n).prop_filter("not identity", |p| p.weight() > 0))
        })
    ) {
        let e = state.expectation(&p).unwrap();
        let plus = state.project_eigenspace(&p, 1).map(|r| r.0).unwrap_or(0.0);
        let minus = state.project_eigenspace(&p, -1).map(|r| r.0).unwrap_or(0.0);
        prop_assert!((plus - (1.0 + e) / 2.0).abs() < 1e-10);
        prop_assert!((plus + minus - 1.0).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn measurement_frequency_matches_born_rule(theta in 0.0f64..std::f64::consts::PI, phi in 0.0f64..6.3, seed in any::<u64>()) {
        let s = InputState::custom(theta, phi).state();
        let z = PauliString::single(1, 0, Pauli::Z).unwrap();
        let p_plus = (1.0 + s.expectation(&z).unwrap()) / 2.0;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 4000;
        let hits = (0..n).filter(|_| s.measure(&z, &mut rng).unwrap().outcome == 1).count();
        let freq = hits as f64 / n as f64;
        let sigma = (p_plus * (1.0 - p_plus) / n as f64).sqrt().max(1.0 / n as f64);
        prop_assert!((freq - p_plus).abs() <= 5.0 * sigma, "freq {} vs {}", freq, p_plus);
    }

    #[test]
    fn single_errors_are_corrected(theta in 0.0f64..std::f64::consts::PI, phi in 0.0f64..6.3, q in 0usize..9, l in 1usize..4) {
        let code = standard();
        let input = InputState::custom(theta, phi);
        let (a, b) = input.amplitudes();
        let clean = encode_logical(a, b).unwrap();
        let mut noisy = clean.clone();
        let err = PauliString::single(9, q, Pauli::from_index(l).unwrap()).unwrap();
        noisy.apply_pauli(&err).unwrap();
        let syndrome = code.syndrome_of(&err);
        prop_assert!(!syndrome.is_trivial());
        let fix = code.decode_correction(&syndrome);
        prop_assert!(fix.confident);
        noisy.apply_pauli(&fix.recovery).unwrap();
        prop_assert!((noisy.fidelity(&clean).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ideal_feedforward_teleports_any_input(theta in 0.0f64..std::f64::consts::PI, phi in 0.0f64..6.3, k in 0usize..4) {
        let resource: ResourceState = prepare_resource_circuit();
        let input = InputState::custom(theta, phi);
        let out = teleport_branch(&input.state(), &resource, BellState::ALL[k], true).unwrap();
        prop_assert!((out.probability - 0.25).abs() < 1e-10);
        prop_assert!((out.state.fidelity(&input.logical_target()).unwrap() - 1.0).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn closed_form_agrees_with_density_oracle(p in 0.0f64..0.15, pi in 0.0f64..0.15, q in 0.0f64..0.3) {
        let noise = NoiseSpec::depolarizing(p, pi, q).unwrap();
        let problem = Problem::new(noise).with_active(true);
        let layout = problem.layout();
        let a = Estimates::exact(&exact_observables(Engine::Analytic, &problem).unwrap(), &layout);
        let d = Estimates::exact(&exact_observables(Engine::Density, &problem).unwrap(), &layout);
        for e in &a.entries {
            let other = d.value(&e.name).unwrap();
            prop_assert!((e.value - other).abs() < 1e-9, "{}: {} vs {}", e.name, e.value, other);
            if e.name.starts_with("f_") || e.name == "p_cs" || e.name.ends_with(".f_raw") || e.name.ends_with(".f_cs") {
                prop_assert!((-1e-12..=1.0 + 1e-12).contains(&e.value), "{} = {}", e.name, e.value);
            }
            if e.name.starts_with("chsh") {
                prop_assert!(e.value.abs() <= 2.0 * std::f64::consts::SQRT_2 + 1e-9);
            }
        }
    }
}
