use fregean_core::variety::{FmMethod, IrreducibleFilters};
use fregean_core::builtin;

fn summary(fm: &IrreducibleFilters) -> Vec<(Vec<usize>, Vec<usize>, usize)> {
    fm.items()
        .iter()
        .map(|it| (it.eta().ones().collect(), it.eta_plus().ones().collect(), it.quotient_size()))
        .collect()
}

#[test]
fn methods_agree_on_small_free_algebras() {
    for name in ["boolean-group", "equiv", "equiv0", "brouwerian", "goedel3", "hilbert0-h", "heyting-h5"] {
        let ctx = builtin(name).unwrap();
        for n in 0..=2 {
            if name == "heyting-h5" && n == 2 {
                continue;
            }
            let lattice = summary(&ctx.irreducibles_with(n, FmMethod::Lattice).unwrap());
            assert!(!lattice.is_empty() || ctx.free_algebra(n).unwrap().size() == 1);
            if ctx.has_hilbert_subtraction() {
                let coords = summary(&ctx.irreducibles_with(n, FmMethod::Coordinates).unwrap());
                assert_eq!(lattice, coords, "{name} n={n}");
            }
            if ctx.extension_operation().is_some() {
                let ext = summary(&ctx.irreducibles_with(n, FmMethod::Extension).unwrap());
                assert_eq!(lattice, ext, "{name} n={n}");
            }
        }
    }
}

#[test]
fn equiv_three_generated_extension_matches_lattice() {
    let ctx = builtin("equiv").unwrap();
    let lattice = summary(&ctx.irreducibles_with(3, FmMethod::Lattice).unwrap());
    let ext = summary(&ctx.irreducibles_with(3, FmMethod::Extension).unwrap());
    assert_eq!(lattice, ext);
}

#[test]
fn boolean_square_has_three_two_element_quotients() {
    let ctx = builtin("boolean-group").unwrap();
    let fm = ctx.irreducibles(2).unwrap();
    assert_eq!(fm.len(), 3);
    assert!(fm.items().iter().all(|it| it.quotient_size() == 2));
}
