use proptest::prelude::*;
use tensor_core::{adam_step, target_update, AdamState, ParamSet, Tape, Tensor};

fn param_set(values: &[f64]) -> ParamSet {
    let mut p = ParamSet::new();
    p.insert("w", Tensor::from_vec(values.to_vec()).unwrap())
        .unwrap();
    p
}

proptest! {
    /// adam_step with zero gradient is the identity on values for any state.
    #[test]
    fn adam_zero_grad_is_identity(
        values in proptest::collection::vec(-10.0f64..10.0, 1..8),
        warm_grads in proptest::collection::vec(-1.0f64..1.0, 0..4),
        lr in 1e-6f64..1.0,
    ) {
        let mut p = param_set(&values);
        let mut state = AdamState::new(&p);
        // Warm the moments with a few arbitrary steps first.
        for g in &warm_grads {
            let grad = Tensor::full(&[values.len()], *g);
            adam_step(&mut p, &[grad], &mut state, lr).unwrap();
        }
        let before = p.get("w").unwrap().clone();
        let steps_before = state.step_count();
        adam_step(&mut p, &[Tensor::zeros(&[values.len()])], &mut state, lr).unwrap();
        prop_assert_eq!(p.get("w").unwrap().data(), before.data());
        prop_assert_eq!(state.step_count(), steps_before + 1);
    }

    /// Hard-copy target updates are idempotent.
    #[test]
    fn hard_copy_twice_equals_once(
        pairs in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..8),
    ) {
        let target: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let online: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let mut t = param_set(&target);
        let o = param_set(&online);
        target_update(&mut t, &o, 1.0).unwrap();
        let once = t.clone();
        target_update(&mut t, &o, 1.0).unwrap();
        prop_assert!(t.bit_identical(&once));
    }

    /// Forward passes are pure functions of (params, input).
    #[test]
    fn forward_is_deterministic(
        values in proptest::collection::vec(-3.0f64..3.0, 6),
    ) {
        let run = || {
            let tape = Tape::new();
            let x = tape.leaf(Tensor::new(vec![2, 3], values.clone()).unwrap());
            let y = tape.tanh(x).unwrap();
            let s = tape.sum_all(y).unwrap();
            tape.value(s).item().unwrap()
        };
        prop_assert_eq!(run().to_bits(), run().to_bits());
    }

    /// Parameter files round-trip bit-exactly for arbitrary finite values.
    #[test]
    fn param_file_roundtrip(values in proptest::collection::vec(-1e12f64..1e12, 1..16)) {
        let p = param_set(&values);
        let mut buf = Vec::new();
        p.save(&mut buf).unwrap();
        let q = ParamSet::load(buf.as_slice()).unwrap();
        prop_assert!(p.bit_identical(&q));
    }
}
