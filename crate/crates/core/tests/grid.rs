use fraclap_core::grid::{inner_region, outer_region, sample};
use fraclap_core::{Grid, Region};

#[test]
fn l2_norm_of_identity_on_domain() {
    // ∫_{-1}^{1} x² dx = 2/3; the trapezoid error is O(Δx²).
    let exact = (2.0_f64 / 3.0).sqrt();
    let mut errors = Vec::new();
    for n in [256, 512, 1024] {
        let grid = Grid::new(8.0, 1.0, n).unwrap();
        let v = sample(|x| x, &grid, false).unwrap();
        let got = v.lp_norm(2.0, &Region::domain(&grid)).unwrap();
        let dx = grid.dx();
        assert!((got - exact).abs() <= dx * dx, "n={n}: {got}");
        errors.push((got - exact).abs());
    }
    for w in errors.windows(2) {
        let rate = w[0] / w[1];
        assert!((rate - 4.0).abs() < 0.1, "rate {rate}");
    }
}

#[test]
fn parallel_sets_nest() {
    let grid = Grid::new(4.0, 1.0, 256).unwrap();
    let domain = Region::domain(&grid);
    let inner = inner_region(&grid, 0.25).unwrap();
    let outer = outer_region(&grid, 0.25).unwrap();
    assert!(inner.is_subset_of(&domain) && domain.is_subset_of(&outer));
    for j in inner.indices() {
        assert!(grid.x(j).abs() <= 0.75 + 1e-12);
    }
    for j in outer.indices() {
        assert!(grid.x(j).abs() <= 1.25 + 1e-12);
    }
    assert!(inner_region(&grid, 1.5)
        .map(|r| r.is_empty())
        .unwrap_or(true));
}
