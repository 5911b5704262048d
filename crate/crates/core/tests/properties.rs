//! Property-based suite: parser round trips, field axioms, transitivity
//! closure, and oracle equivalence on random small networks.

use proptest::prelude::*;

use influx::gf::PrimeField;
use influx::influence::{influence_matrix, InfluenceConfig};
use influx::network::{network_from_json, network_to_json, parse_network, serialize_network};
use influx::oracle::{oracle_influence_matrix, OracleError};

/// DSL text of a random network: up to `max_m` metabolites, `1..=max_e`
/// reactions, at most two distinct species with coefficient 1..=3 per side.
fn arb_network_text(max_m: usize, max_e: usize) -> impl Strategy<Value = String> {
    (1..=max_m).prop_flat_map(move |m| {
        let side = prop::collection::vec((0..m, 1u64..=3), 0..=2);
        prop::collection::vec((side.clone(), side), 1..=max_e).prop_map(|reactions| {
            let mut out = String::new();
            for (j, (ins, outs)) in reactions.into_iter().enumerate() {
                let fmt = |terms: &[(usize, u64)]| {
                    let mut seen: Vec<usize> = Vec::new();
                    terms
                        .iter()
                        .filter(|(mm, _)| {
                            // parser rejects a species repeated within a side
                            if seen.contains(mm) {
                                false
                            } else {
                                seen.push(*mm);
                                true
                            }
                        })
                        .map(|&(mm, c)| format!("{c} M{mm}"))
                        .collect::<Vec<_>>()
                        .join(" + ")
                };
                out.push_str(&format!("r{j}: {} -> {}\n", fmt(&ins), fmt(&outs)));
            }
            out
        })
    })
}

proptest! {
    #[test]
    fn dsl_round_trip(text in arb_network_text(5, 8)) {
        let Ok(net) = parse_network(&text) else {
            return Ok(()); // all-empty reaction lists are rejected as Empty
        };
        let printed = serialize_network(&net);
        let back = parse_network(&printed).expect("serialized text parses");
        prop_assert_eq!(&net, &back);
        prop_assert_eq!(printed, serialize_network(&back));
    }

    #[test]
    fn json_round_trip(text in arb_network_text(5, 8)) {
        let Ok(net) = parse_network(&text) else {
            return Ok(()); // all-empty reaction lists are rejected as Empty
        };
        let json = network_to_json(&net);
        let back = network_from_json(&json).expect("deserializes");
        prop_assert_eq!(net, back);
    }

    #[test]
    fn field_axioms(
        p_idx in 0usize..4,
        a in any::<i64>(),
        b in any::<i64>(),
        c in any::<i64>(),
    ) {
        let primes: [u128; 4] = [3, 101, (1 << 61) - 1, (1 << 89) - 1];
        let f = PrimeField::new(primes[p_idx]);
        let (a, b, c) = (f.from_i64(a), f.from_i64(b), f.from_i64(c));
        prop_assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
        prop_assert_eq!(f.add(a, b), f.add(b, a));
        prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
        prop_assert_eq!(f.mul(a, b), f.mul(b, a));
        prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
        prop_assert_eq!(f.add(a, f.neg(a)), f.from_i64(0));
        prop_assert_eq!(f.sub(a, b), f.add(a, f.neg(b)));
        if a != 0 {
            let inv = f.inv(a).expect("nonzero invertible");
            prop_assert_eq!(f.mul(a, inv), f.from_i64(1));
        }
    }

}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transitivity_closure(text in arb_network_text(5, 8), seed in 0u64..1_000_000) {
        let Ok(net) = parse_network(&text) else {
            return Ok(()); // all-empty reaction lists are rejected as Empty
        };
        let cfg = InfluenceConfig { seed, extended: true, ..InfluenceConfig::default() };
        if let Ok(infl) = influence_matrix(&net, &cfg) {
            prop_assert_eq!(infl.transitivity_violation(), None);
        }
    }

    #[test]
    fn oracle_equivalence(text in arb_network_text(4, 6), seed in 0u64..1_000_000) {
        let Ok(net) = parse_network(&text) else {
            return Ok(()); // all-empty reaction lists are rejected as Empty
        };
        let cfg = InfluenceConfig { seed, ..InfluenceConfig::default() };
        match oracle_influence_matrix(&net) {
            Ok(truth) => {
                let infl = influence_matrix(&net, &cfg).expect("regular per oracle");
                for beta in 0..truth.rows() {
                    for alpha in 0..truth.cols() {
                        prop_assert_eq!(infl.get(beta, alpha), truth.get(beta, alpha),
                            "entry ({}, {}) of\n{}", beta, alpha, text);
                    }
                }
            }
            Err(OracleError::NotRegular) => {
                prop_assert!(influence_matrix(&net, &cfg).is_err());
            }
            Err(e) => prop_assert!(false, "oracle error: {}", e),
        }
    }
}
