use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use vericom::allocation::{allocate, RangeAllocation, WeightDictionary};
use vericom::model::{Digest, Keypair, SignatureScheme, ALPHABET};
use vericom::verification::{admissibility_bound, select_validator_set, select_verifier_set, SetParams};

fn alloc(n: usize, seed: u64) -> RangeAllocation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pks: Vec<_> = (0..n).map(|_| Keypair::generate(SignatureScheme::Simulated, &mut rng).public()).collect();
    allocate(&WeightDictionary::default(), &pks).unwrap()
}

/// Independent ring arithmetic: the positions within `wing` steps of `main`.
fn ring_around(main: usize, wing: usize, len: usize) -> BTreeSet<usize> {
    (0..=wing).flat_map(|k| [(main + k) % len, (main + len - k) % len]).collect()
}

/// Every admissible `(n, m)` for `len` validators, and every digest MSCh
/// paired with every block MSCh.
#[test]
fn exhaustive_disjointness_and_offset() {
    for len in 8..=16 {
        let a = alloc(len, len as u64);
        for n in 1..len {
            for m in 0..len {
                let Ok(params) = SetParams::new(n, m, len) else { continue };
                assert!(len > admissibility_bound(n, m));
                for &tx_sym in ALPHABET {
                    let td = Digest::parse(&(tx_sym as char).to_string()).unwrap();
                    let vset = select_validator_set(&td, &a, &params).unwrap();
                    let vs: BTreeSet<usize> = vset.members().collect();
                    assert_eq!(vs, ring_around(vset.main, n, len));
                    assert_eq!(vs.len(), 2 * n + 1);
                    for &blk_sym in ALPHABET {
                        let bd = Digest::parse(&(blk_sym as char).to_string()).unwrap();
                        let vrf = select_verifier_set(&bd, &a, &params, &vset).unwrap();
                        let vr: BTreeSet<usize> = vrf.members().collect();
                        assert_eq!(vr.len(), 2 * m + 1);
                        assert!(vs.is_disjoint(&vr), "len {len} n {n} m {m} tx {tx_sym} block {blk_sym}");
                        let candidate = a.range_of(bd.msch());
                        if vrf.relocated {
                            let off = if n > m { 2 * n } else { 2 * n + m };
                            assert_eq!(vrf.main, (vset.main + off) % len);
                            assert!(!ring_around(candidate, m, len).is_disjoint(&vs));
                        } else {
                            assert_eq!(vrf.main, candidate);
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn inadmissible_sizes_rejected() {
    for len in 1..=20 {
        for n in 1..6 {
            for m in 0..6 {
                let ok = SetParams::new(n, m, len).is_ok();
                let bound = if n > m { 3 * n + m } else { 3 * n + 2 * m };
                assert_eq!(ok, len > bound && 4 * n <= len, "len {len} n {n} m {m}");
            }
        }
    }
}
