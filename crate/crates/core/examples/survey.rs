//! Seeded survey of random two-block assemblies at p = 3.
//!
//! Prints, per assembly, the tight coefficient indices and the halo outcome, then a summary
//! split by how many coefficients meet their bound with equality.
//!
//! `cargo run --release -p halo-core --example survey -- [count] [seed]`

use halo_core::halo::{assemble_up_matrix, char_series, coefficient_bound_check, halo_report, UpAssembly};
use halo_core::mahler::{CharacterSpec, MonoidElement, SingleCharacter, WildPart};
use halo_core::polygon::Q;
use halo_core::RingDescriptor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TERMS: usize = 14;

fn element(rng: &mut ChaCha8Rng) -> MonoidElement {
    loop {
        let a = 3 * rng.gen_range(-4..=4i64);
        let b = rng.gen_range(-6..=6i64);
        let c = 3 * rng.gen_range(-4..=4i64);
        let d = [-4, -2, -1, 1, 2, 4][rng.gen_range(0..6)];
        if let Ok(m) = MonoidElement::new(a, b, c, d, 3) {
            return m;
        }
    }
}

fn random_assembly(rng: &mut ChaCha8Rng, k: u64) -> UpAssembly {
    let character = CharacterSpec {
        n: SingleCharacter {
            torsion_exponent: k,
            wild: WildPart::Universal,
        },
        nu: SingleCharacter::trivial(),
    };
    // two elements on the diagonal cells, one off the diagonal
    let counts = [[2, 1], [1, 2]];
    let blocks = counts
        .iter()
        .map(|row| row.iter().map(|&c| (0..c).map(|_| element(rng)).collect()).collect())
        .collect();
    UpAssembly::new(3, character, blocks).expect("valid by construction")
}

fn main() {
    let args: Vec<u64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let count = args.first().copied().unwrap_or(300) as usize;
    let seed = args.get(1).copied().unwrap_or(7);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let desc = RingDescriptor::<u64>::new(3, 39, 40, None).unwrap();
    let grid = [Q::new(1, 4), Q::new(1, 3), Q::new(1, 2), Q::new(2, 3)];
    // (assemblies, with a FAIL) for fewer than 6 tight indices and for at least 6
    let mut buckets = [(0usize, 0usize); 2];
    let mut errors = 0;
    for i in 0..count {
        let asm = random_assembly(&mut rng, (i % 2) as u64);
        let outcome = assemble_up_matrix(&asm, &desc, TERMS).and_then(|op| {
            let cs = char_series(&op, TERMS)?;
            let rep = coefficient_bound_check(&cs, &op.profile.mu_sequence(TERMS));
            let halo = halo_report(&cs, &grid, 3)?;
            Ok((rep, halo))
        });
        let (rep, halo) = match outcome {
            Ok(x) => x,
            Err(e) => {
                println!("{i:>4} error: {e}");
                errors += 1;
                continue;
            }
        };
        let b = &mut buckets[usize::from(rep.tight.len() >= 6)];
        b.0 += 1;
        b.1 += usize::from(!halo.failures.is_empty());
        println!(
            "{i:>4} bounds {} tight {:?} flagged {} failures {:?}",
            if rep.passed() { "ok" } else { "VIOLATED" },
            rep.tight,
            halo.flagged.len(),
            halo.failures
        );
    }
    println!("tight < 6: {} assemblies, {} with FAIL", buckets[0].0, buckets[0].1);
    println!("tight >= 6: {} assemblies, {} with FAIL", buckets[1].0, buckets[1].1);
    println!("errors: {errors}");
}
