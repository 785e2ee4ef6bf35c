use std::sync::{Arc, OnceLock};

use ppir_core::he::{gen_keyset, replicate, Evaluator, HeContext, HeParams, PublicKeySet, SecretKey};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

struct Fixture {
    ctx: Arc<HeContext>,
    sk: SecretKey,
    keys: PublicKeySet,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let ctx = HeContext::new(HeParams::with_degree(1024)).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let (sk, keys) = gen_keyset(&ctx, &mut rng, true);
        Fixture { ctx, sk, keys }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn encrypt_decrypt(values in prop::collection::vec(-100.0f64..100.0, 1..512), seed in any::<u64>()) {
        let f = fixture();
        let ev = Evaluator::new(f.ctx.clone());
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let ct = ev.encrypt_values(&values, f.keys.public().unwrap(), &mut rng).unwrap();
        let back = ev.decrypt_values(&ct, &f.sk);
        for (a, b) in values.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
    }

    #[test]
    fn rotation_shifts_slots(values in prop::collection::vec(-10.0f64..10.0, 512), step in 0usize..512, seed in any::<u64>()) {
        let f = fixture();
        let ev = Evaluator::new(f.ctx.clone());
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let ct = ev.encrypt_values(&values, f.keys.public().unwrap(), &mut rng).unwrap();
        let back = ev.decrypt_values(&ev.rotate(&ct, step, &f.keys).unwrap(), &f.sk);
        let slots = values.len();
        for i in 0..slots {
            prop_assert!((back[i] - values[(i + step) % slots]).abs() < 1e-3);
        }
    }

    #[test]
    fn dot_plain_matches_clear(
        v in prop::collection::vec(-1.0f64..1.0, 1..16),
        rows in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 16), 1..8),
        seed in any::<u64>(),
    ) {
        let f = fixture();
        let ev = Evaluator::new(f.ctx.clone());
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r[..v.len()].to_vec()).collect();
        let d = v.len().next_power_of_two();
        let ct = ev.encrypt_values(&replicate(&v, d, f.ctx.slots()), f.keys.public().unwrap(), &mut rng).unwrap();
        let (out, got_d) = ev.dot_plain(&ct, &rows, &f.keys).unwrap();
        prop_assert_eq!(got_d, d);
        let back = ev.decrypt_values(&out, &f.sk);
        for (r, row) in rows.iter().enumerate() {
            let want: f64 = row.iter().zip(&v).map(|(a, b)| a * b).sum();
            prop_assert!((back[r * d] - want).abs() < 1e-3, "row {r}: {} vs {want}", back[r * d]);
        }
    }
}
