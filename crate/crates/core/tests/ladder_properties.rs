//! Grid-independence and loss-monotonicity of the ladder metrics, exercised
//! on a realistic optimized design rather than toy circuits.

use sawfilt_core::{
    init_design, make_grid, metrics, optimize, simulate, DesignTargets, FilterMetrics, GridSpacing,
    LadderTopology,
};

fn demo_targets() -> DesignTargets {
    DesignTargets::new(
        4.3e9,
        0.0324,
        50.0,
        vec![(3.95e9, 4.1e9), (4.5e9, 4.65e9)],
        14.0,
    )
    .unwrap()
}

/// An optimized three-stage-role ladder comparable to the shipped demo.
fn demo_filter() -> (LadderTopology, DesignTargets) {
    let targets = demo_targets();
    let t0 = init_design(&targets, 0.045, 1522.0, 893.0, 7.746e-13, 7.746e-13).unwrap();
    let grid = make_grid(3.9e9, 4.7e9, 1601, GridSpacing::Linear).unwrap();
    let (t, _) = optimize(&t0, &targets, &grid).unwrap();
    (t, targets)
}

fn metrics_on(t: &LadderTopology, targets: &DesignTargets, n: usize) -> FilterMetrics {
    let grid = make_grid(3.9e9, 4.7e9, n, GridSpacing::Linear).unwrap();
    metrics(&simulate(t, &grid, targets.z_ref).unwrap(), targets).unwrap()
}

#[test]
fn metrics_are_stable_under_grid_doubling() {
    let (t, targets) = demo_filter();
    let coarse = metrics_on(&t, &targets, 1601);
    let fine = metrics_on(&t, &targets, 3201);
    assert!(
        (fine.il_db - coarse.il_db).abs() < 0.01,
        "il moved {} -> {}",
        coarse.il_db,
        fine.il_db
    );
    assert!(
        (fine.fbw_3db - coarse.fbw_3db).abs() / coarse.fbw_3db < 0.005,
        "fbw moved {} -> {}",
        coarse.fbw_3db,
        fine.fbw_3db
    );
}

#[test]
fn increasing_any_resistance_never_decreases_insertion_loss() {
    let (t, targets) = demo_filter();
    let base = metrics_on(&t, &targets, 1601);

    // bump each loss element of each stage separately and re-measure
    let mut variants: Vec<(String, LadderTopology)> = Vec::new();
    for (i, (role, model)) in t.stages.iter().enumerate() {
        let mut m = model.clone();
        m.r_s += 0.5;
        variants.push((format!("stage {i} ({role:?}) r_s"), replace_stage(&t, i, m)));

        let mut m = model.clone();
        m.r_0 += 0.5;
        variants.push((format!("stage {i} ({role:?}) r_0"), replace_stage(&t, i, m)));

        let mut m = model.clone();
        m.branches[0].r_m *= 1.5;
        variants.push((format!("stage {i} ({role:?}) r_m"), replace_stage(&t, i, m)));
    }

    for (what, variant) in variants {
        let m = metrics_on(&variant, &targets, 1601);
        assert!(
            m.il_db >= base.il_db - 1e-9,
            "{what}: il went down, {} -> {}",
            base.il_db,
            m.il_db
        );
    }
}

fn replace_stage(t: &LadderTopology, i: usize, m: sawfilt_core::MbvdModel) -> LadderTopology {
    let mut stages = t.stages.clone();
    stages[i].1 = m;
    LadderTopology::new(stages).unwrap()
}
