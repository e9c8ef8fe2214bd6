//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::collections::{BTreeSet, VecDeque};
use std::time::{Duration, Instant};

use mondrian_polya::eval::grid::cell_volume;
use mondrian_polya::eval::{density_grid, gen_synthetic, roc_auc, SyntheticSet};
use mondrian_polya::forest::{is_epsilon_anomaly, meets_vote};
use mondrian_polya::streaming::rescale_time;
use mondrian_polya::{
    beta_mean, BatchTree, BoundingBox, CutSource, Forest, LeafKind, Matrix, ModelKind, MpTree, NodeId, RngState,
    ScriptedCut, Trees, TreeConfig,
};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(a: f64, b: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure((a - b).abs() <= tol, || format!("{what}: got {a}, expected {b} (tol {tol})"))
}

fn uniform_matrix(rng: &mut RngState, n: usize, d: usize) -> Matrix {
    Matrix::new(n, d, (0..n * d).map(|_| rng.next_unit()).collect()).unwrap()
}

fn node_by_code(t: &MpTree, code: &str) -> Result<NodeId, String> {
    t.tree()
        .preorder()
        .into_iter()
        .find(|id| t.tree().node(*id).payload.encoding == code)
        .ok_or_else(|| format!("no node with encoding {code}"))
}

fn worked_tree() -> MpTree {
    let data = Matrix::from_rows(&[[0.0, 0.0], [0.25, 0.25], [0.4, 0.8], [1.0, 1.0]]).unwrap();
    let cfg = TreeConfig {
        max_depth: 2,
        gamma: 1.0,
        ..TreeConfig::default()
    };
    let mut script = VecDeque::from([ScriptedCut::new(0, 0.5, 1.0), ScriptedCut::new(1, 0.4, 2.0)]);
    MpTree::sample_scripted(&data, &cfg, &mut script).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let t = worked_tree();
    let tol = 1e-9;
    let root = node_by_code(&t, "")?;
    let chi = t.tree().node(root).payload.chi.ok_or("root has no cut parameters")?;
    within(chi[0], 3.5, tol, "root chi0")?;
    within(chi[1], 1.5, tol, "root chi1")?;
    within(beta_mean(chi[0], chi[1]), 0.7, tol, "root cut mean")?;
    let n0 = node_by_code(&t, "0∈")?;
    let rho = t.tree().node(n0).payload.rho.ok_or("node 0 has no restriction parameters")?;
    within(rho[0], 5.56, tol, "rho_in at 0")?;
    within(rho[1], 1.44, tol, "rho_out at 0")?;
    let chi = t.tree().node(n0).payload.chi.ok_or("node 0∈ has no cut parameters")?;
    within(chi[0], 6.5, tol, "chi0 at 0∈")?;
    within(chi[1], 5.5, tol, "chi1 at 0∈")?;
    within(beta_mean(chi[0], chi[1]), 13.0 / 24.0, tol, "cut mean at 0∈")?;
    let n00 = node_by_code(&t, "0∈0∈")?;
    let rho = t.tree().node(n00).payload.rho.ok_or("node 0∈0 has no restriction parameters")?;
    within(rho[0], 8.25, tol, "rho_in at 0∈0")?;
    within(rho[1], 9.75, tol, "rho_out at 0∈0")?;
    within(beta_mean(rho[0], rho[1]), 11.0 / 24.0, tol, "observed mean at 0∈0")?;
    let (mass, hit) = t.leaf_mass(&[1.0, 1.0]).map_err(|e| e.to_string())?;
    within(mass, 0.3, tol, "mass of leaf 1")?;
    ensure(hit.map(|h| h.kind) == Some(LeafKind::ObservedTypeI), || "leaf 1 is not Type I".into())?;
    within(t.density(&[1.0, 1.0]).map_err(|e| e.to_string())?, 0.6, tol, "density of leaf 1")?;
    let leaves = t.leaves();
    let codes: BTreeSet<&str> = leaves.iter().map(|l| l.encoding.as_str()).collect();
    let expected: BTreeSet<&str> = ["0∈0∈", "0∈0¬", "0∈1", "0¬", "1"].into();
    ensure(leaves.len() == 5 && codes == expected, || format!("leaves {codes:?}"))?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("worked example matches, 5 leaves, {elapsed:.2?}"))
}

/// Fixtures shared by criteria 2 and 3.
struct RandomForests {
    streaming: Vec<MpTree>,
    batch: Vec<BatchTree>,
    max_mass_error: f64,
    max_mass_error_after_updates: f64,
    conjugacy_checks: usize,
    rho_out_prior_checks: usize,
    rho_out_untouched: usize,
    rho_out_geometry_moved: usize,
    failures: Vec<String>,
}

/// Node id, depth, observed and region log-volumes, and restriction parameters.
type NodeSnapshot = (NodeId, usize, f64, f64, Option<[f64; 2]>);

fn stream_mass(t: &MpTree) -> f64 {
    t.leaves().iter().map(|l| l.mass).sum()
}

/// Exact posterior-minus-prior checks on every node.
fn check_conjugacy(t: &MpTree, checks: &mut usize, rho_checks: &mut usize) -> Result<(), String> {
    for id in t.tree().preorder() {
        let node = t.tree().node(id);
        if let Some((l, r)) = t.tree().children(id) {
            let chi = node.payload.chi.ok_or("internal node without chi")?;
            let prior = t.prior_chi(id).unwrap();
            ensure(chi[0] == prior[0] + t.tree().node(l).count as f64, || format!("chi0 at {id:?}"))?;
            ensure(chi[1] == prior[1] + t.tree().node(r).count as f64, || format!("chi1 at {id:?}"))?;
            *checks += 2;
        }
        if let Some(prior) = t.prior_rho(id) {
            let rho = node.payload.rho.ok_or("restricted node without rho")?;
            ensure(rho[0] == prior[0] + node.count as f64, || format!("rho_in at {id:?}"))?;
            ensure(rho[1] == prior[1], || format!("rho_out at {id:?} took counts"))?;
            *checks += 2;
            *rho_checks += 1;
        }
    }
    Ok(())
}

fn build_random_forests() -> RandomForests {
    let mut out = RandomForests {
        streaming: Vec::new(),
        batch: Vec::new(),
        max_mass_error: 0.0,
        max_mass_error_after_updates: 0.0,
        conjugacy_checks: 0,
        rho_out_prior_checks: 0,
        rho_out_untouched: 0,
        rho_out_geometry_moved: 0,
        failures: Vec::new(),
    };
    let mut seeder = RngState::new(20_240_601);
    for k in 0..100u64 {
        let seed = (seeder.next_unit() * 1e12) as u64;
        let mut rng = RngState::new(seed);
        let data = uniform_matrix(&mut rng, 200, 3);
        let cfg = TreeConfig {
            seed,
            ..TreeConfig::default()
        };
        let bt = BatchTree::sample(&data, None, &cfg, &mut CutSource::Random(&mut rng.fork(1))).unwrap();
        let total: f64 = bt.leaves().iter().map(|l| l.1).sum();
        out.max_mass_error = out.max_mass_error.max((total - 1.0).abs());
        out.batch.push(bt);

        let mut t = MpTree::sample(&data, &cfg, rng.fork(2)).unwrap();
        out.max_mass_error = out.max_mass_error.max((stream_mass(&t) - 1.0).abs());
        let (mut checks, mut rho_checks) = (out.conjugacy_checks, out.rho_out_prior_checks);
        if let Err(e) = check_conjugacy(&t, &mut checks, &mut rho_checks) {
            out.failures.push(format!("tree {k} before updates: {e}"));
        }
        let mut ops = rng.fork(3);
        for step in 0..100 {
            if step % 2 == 0 {
                let z: Vec<f64> = (0..3).map(|_| ops.next_unit() * 1.4 - 0.2).collect();
                let before: Vec<NodeSnapshot> = t
                    .tree()
                    .preorder()
                    .into_iter()
                    .map(|n| {
                        let node = t.tree().node(n);
                        let p = &node.payload;
                        (n, node.depth, p.observed_log_volume, p.region_log_volume, p.rho)
                    })
                    .collect();
                t.insert(&z).unwrap();
                for (n, depth, obs, region, rho) in before {
                    let Some(rho) = rho else { continue };
                    if !t.tree().contains(n) {
                        continue;
                    }
                    let node = t.tree().node(n);
                    let p = &node.payload;
                    let Some(now) = p.rho else { continue };
                    if node.depth == depth && p.observed_log_volume == obs && p.region_log_volume == region {
                        out.rho_out_untouched += 1;
                        if now[1] != rho[1] {
                            out.failures.push(format!("tree {k}: rho_out moved at {n:?} on insert"));
                        }
                    } else {
                        out.rho_out_geometry_moved += 1;
                    }
                }
            } else {
                let ids = t.point_ids();
                let pick = ids[(ops.next_unit() * ids.len() as f64) as usize];
                t.delete(pick).unwrap();
            }
            if let Err(e) = check_conjugacy(&t, &mut checks, &mut rho_checks) {
                out.failures.push(format!("tree {k} step {step}: {e}"));
            }
            out.max_mass_error_after_updates =
                out.max_mass_error_after_updates.max((stream_mass(&t) - 1.0).abs());
        }
        if let Err(e) = t.check_invariants() {
            out.failures.push(format!("tree {k} invariants: {e}"));
        }
        out.conjugacy_checks = checks;
        out.rho_out_prior_checks = rho_checks;
        out.streaming.push(t);
    }
    out
}

fn criterion_2(f: &RandomForests, elapsed: Duration) -> Outcome {
    ensure(f.max_mass_error <= 1e-9, || format!("fresh trees: max |Σ−1| = {:e}", f.max_mass_error))?;
    ensure(f.max_mass_error_after_updates <= 1e-9, || {
        format!("after updates: max |Σ−1| = {:e}", f.max_mass_error_after_updates)
    })?;
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "100 SMPT + 100 BMPT, max |Σ−1| = {:.1e} fresh, {:.1e} after 50+50 updates, {elapsed:.2?}",
        f.max_mass_error, f.max_mass_error_after_updates
    ))
}

fn criterion_3(f: &RandomForests) -> Outcome {
    if let Some(first) = f.failures.first() {
        return Err(format!("{} failures, first: {first}", f.failures.len()));
    }
    let mut batch_checks = 0;
    for bt in &f.batch {
        for id in bt.tree().preorder() {
            let Some((l, r)) = bt.tree().children(id) else { continue };
            let alpha = bt.tree().node(id).payload.alpha.ok_or("batch split without alpha")?;
            let prior = bt.prior_alpha(id).unwrap();
            ensure(alpha[0] == prior[0] + bt.tree().node(l).count as f64, || format!("alpha0 at {id:?}"))?;
            ensure(alpha[1] == prior[1] + bt.tree().node(r).count as f64, || format!("alpha1 at {id:?}"))?;
            batch_checks += 2;
        }
    }
    Ok(format!(
        "{} streaming + {batch_checks} batch exact checks; rho_out equals its prior in {} checks; \
         unchanged across inserts at all {} nodes with untouched geometry ({} nodes had geometry move)",
        f.conjugacy_checks, f.rho_out_prior_checks, f.rho_out_untouched, f.rho_out_geometry_moved
    ))
}

fn criterion_4() -> Outcome {
    let mut rng = RngState::new(4);
    let mut trials = 0;
    let mut worst = 0.0f64;
    for k in 0..50u64 {
        let data = uniform_matrix(&mut rng, 100, 2 + (k % 3) as usize);
        let mut t = MpTree::sample(&data, &TreeConfig::default(), rng.fork(k)).unwrap();
        for _ in 0..20 {
            let leaves = t.tree().leaves();
            let leaf = leaves[(rng.next_unit() * leaves.len() as f64) as usize];
            let pts = t.tree().node(leaf).points.clone();
            let a = t.point(pts[0]).unwrap().to_vec();
            let b = t.point(pts[pts.len() - 1]).unwrap().to_vec();
            let z: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
            let before_tree = t.tree().clone();
            let before_leaves = t.leaves();
            let id = t.insert(&z).map_err(|e| e.to_string())?;
            t.delete(id).map_err(|e| e.to_string())?;
            ensure(t.tree() == &before_tree, || format!("tree {k}: structure or counters changed"))?;
            let after = t.leaves();
            ensure(after.len() == before_leaves.len(), || "leaf count changed".into())?;
            for (x, y) in after.iter().zip(&before_leaves) {
                worst = worst.max((x.mass - y.mass).abs());
            }
            trials += 1;
        }
    }
    ensure(worst <= 1e-12, || format!("mass drift {worst:e}"))?;

    // closed form against the inverse CDF of the waiting time
    let mut max_rel = 0.0f64;
    for _ in 0..1000 {
        let tau_p = rng.next_unit() * 3.0;
        let l_old = 0.1 + rng.next_unit() * 5.0;
        let l_new = l_old * (0.05 + 0.95 * rng.next_unit());
        // one uniform pushed through the inverse CDF under both rates
        let u = 1.0 - rng.next_unit();
        let tau = tau_p - u.ln() / l_old;
        let oracle = tau_p - u.ln() / l_new;
        let got = rescale_time(tau_p, tau, l_old, l_new);
        max_rel = max_rel.max(((got - oracle) / oracle).abs());
        ensure(got >= tau, || format!("rescaled time {got} < {tau}"))?;
    }
    ensure(max_rel <= 1e-9, || format!("closed form vs inverse CDF: rel err {max_rel:e}"))?;

    // deletions on the boundary never move a split time earlier
    let mut monotone_checks = 0;
    for k in 0..30u64 {
        let data = uniform_matrix(&mut rng, 80, 3);
        let cfg = TreeConfig {
            lifetime: 4.0 + k as f64,
            ..TreeConfig::default()
        };
        let mut t = MpTree::sample(&data, &cfg, rng.fork(100 + k)).unwrap();
        for _ in 0..60 {
            let before: Vec<(NodeId, f64)> =
                t.tree().preorder().into_iter().map(|n| (n, t.tree().node(n).time)).collect();
            let ids = t.point_ids();
            t.delete(ids[(rng.next_unit() * ids.len() as f64) as usize]).map_err(|e| e.to_string())?;
            for (n, old) in before {
                if t.tree().contains(n) {
                    ensure(t.tree().node(n).time >= old, || format!("time of {n:?} decreased"))?;
                    monotone_checks += 1;
                }
            }
        }
    }
    Ok(format!(
        "{trials} round trips exact (max mass drift {worst:.1e}); rescale rel err {max_rel:.1e}; \
         {monotone_checks} τ' ≥ τ checks"
    ))
}

fn script_of(t: &MpTree) -> VecDeque<ScriptedCut> {
    t.tree()
        .preorder()
        .into_iter()
        .filter_map(|id| {
            let n = t.tree().node(id);
            n.split.as_ref().map(|s| ScriptedCut::new(s.dim, s.loc, n.time))
        })
        .collect()
}

/// Node-by-node comparison in pre-order; `ids` maps point ids of `a` to those of `b`.
fn compare_trees(a: &MpTree, b: &MpTree, ids: &dyn Fn(usize) -> usize) -> Result<f64, String> {
    let (pa, pb) = (a.tree().preorder(), b.tree().preorder());
    ensure(pa.len() == pb.len(), || format!("{} vs {} nodes", pa.len(), pb.len()))?;
    let mut worst = 0.0f64;
    let diff = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
    for (x, y) in pa.into_iter().zip(pb) {
        let (nx, ny) = (a.tree().node(x), b.tree().node(y));
        ensure(nx.bbox == ny.bbox && nx.count == ny.count && nx.depth == ny.depth, || {
            format!("geometry differs at {x:?}")
        })?;
        ensure(nx.time == ny.time, || format!("time differs at {x:?}"))?;
        ensure(
            nx.split.as_ref().map(|s| (s.dim, s.loc)) == ny.split.as_ref().map(|s| (s.dim, s.loc)),
            || format!("split differs at {x:?}"),
        )?;
        let mut px: Vec<usize> = nx.points.iter().map(|p| ids(*p)).collect();
        let mut py = ny.points.clone();
        px.sort_unstable();
        py.sort_unstable();
        ensure(px == py, || format!("stored points differ at {x:?}"))?;
        let (qx, qy) = (&nx.payload, &ny.payload);
        ensure(qx.kind == qy.kind && qx.encoding == qy.encoding, || format!("labels differ at {x:?}"))?;
        ensure(qx.chi.is_some() == qy.chi.is_some() && qx.rho.is_some() == qy.rho.is_some(), || {
            format!("parameter presence differs at {x:?}")
        })?;
        if let (Some(u), Some(v)) = (qx.chi, qy.chi) {
            worst = worst.max(diff(&u, &v));
        }
        if let (Some(u), Some(v)) = (qx.rho, qy.rho) {
            worst = worst.max(diff(&u, &v));
        }
        worst = worst.max(diff(
            &[qx.observed_log_volume, qx.region_log_volume],
            &[qy.observed_log_volume, qy.region_log_volume],
        ));
    }
    let (la, lb) = (a.leaves(), b.leaves());
    ensure(la.len() == lb.len(), || "leaf counts differ".into())?;
    for (u, v) in la.iter().zip(&lb) {
        worst = worst.max((u.mass - v.mass).abs());
    }
    Ok(worst)
}

fn criterion_5() -> Outcome {
    let mut worst = 0.0f64;
    let mut rng = RngState::new(5);
    let mut inserted = 0;
    for k in 0..30u64 {
        let d = 2 + (k % 3) as usize;
        let data = uniform_matrix(&mut rng, 150, d);
        let cfg = TreeConfig {
            max_depth: 6 + (k % 5) as usize,
            ..TreeConfig::default()
        };
        let full = MpTree::sample(&data, &cfg, rng.fork(k)).unwrap();

        // points pinning down every box of the full tree
        let mut skeleton = BTreeSet::new();
        for id in full.tree().preorder() {
            let node = full.tree().node(id);
            let pts = full.tree().subtree_points(id);
            for dim in 0..d {
                for target in [node.bbox.lower()[dim], node.bbox.upper()[dim]] {
                    let p = pts.iter().find(|p| data.row(**p)[dim] == target).unwrap();
                    skeleton.insert(*p);
                }
            }
        }
        let skeleton: Vec<usize> = skeleton.into_iter().collect();
        let rest: Vec<usize> = (0..data.n_rows()).filter(|i| !skeleton.contains(i)).collect();
        let sub = Matrix::from_rows(&skeleton.iter().map(|i| data.row(*i)).collect::<Vec<_>>()).unwrap();
        let mut script = script_of(&full);
        let mut online = MpTree::sample_scripted(&sub, &cfg, &mut script).map_err(|e| e.to_string())?;
        ensure(script.is_empty(), || format!("tree {k}: {} scripted cuts unused", script.len()))?;
        let mut ids = skeleton.clone();
        let mut order = rest.clone();
        // shuffle so insertion order is arbitrary
        for i in (1..order.len()).rev() {
            let j = (rng.next_unit() * (i + 1) as f64) as usize;
            order.swap(i, j);
        }
        let mut empty = VecDeque::new();
        for i in order {
            online
                .insert_with(data.row(i), &mut CutSource::Scripted(&mut empty))
                .map_err(|e| e.to_string())?;
            ids.push(i);
            inserted += 1;
        }
        worst = worst.max(compare_trees(&online, &full, &|p| ids[p]).map_err(|e| format!("tree {k}: {e}"))?);
    }

    // the worked example grown point by point, with the splices scripted
    let batch = worked_tree();
    let pts = [[0.0, 0.0], [0.25, 0.25], [0.4, 0.8], [1.0, 1.0]];
    let cfg = batch.config().clone();
    let first = Matrix::from_rows(&pts[..2]).unwrap();
    let mut online = MpTree::sample_scripted(&first, &cfg, &mut VecDeque::new()).map_err(|e| e.to_string())?;
    let mut s = VecDeque::from([ScriptedCut::new(1, 0.4, 2.0)]);
    online.insert_with(&pts[2], &mut CutSource::Scripted(&mut s)).map_err(|e| e.to_string())?;
    let mut s = VecDeque::from([ScriptedCut::new(0, 0.5, 1.0)]);
    online.insert_with(&pts[3], &mut CutSource::Scripted(&mut s)).map_err(|e| e.to_string())?;
    worst = worst.max(compare_trees(&online, &batch, &|p| p)?);

    ensure(worst <= 1e-12, || format!("max parameter difference {worst:e}"))?;
    Ok(format!(
        "30 random trees rebuilt from skeletons with {inserted} online inserts plus the worked example \
         grown by two splices; max difference {worst:.1e}"
    ))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let sets = [
        (SyntheticSet::Blob, 0.93),
        (SyntheticSet::TwoBlobsTight, 0.97),
        (SyntheticSet::Moons, 0.85),
        (SyntheticSet::MoonAndBlob, 0.93),
    ];
    let mut lines = Vec::new();
    let mut failed = Vec::new();
    for (set, threshold) in sets {
        for kind in [ModelKind::Streaming, ModelKind::Batch] {
            let mut aucs = Vec::new();
            for seed in 0..5u64 {
                let ds = gen_synthetic(set, 425, 75, seed).map_err(|e| e.to_string())?;
                let cfg = TreeConfig {
                    max_depth: 10,
                    gamma: 1.0,
                    seed: 1000 + seed,
                    ..TreeConfig::default()
                };
                let forest = Forest::fit(&ds.rows, &cfg, kind, 100).map_err(|e| e.to_string())?;
                let scores = forest.mass_scores(&ds.rows).map_err(|e| e.to_string())?;
                aucs.push(roc_auc(&scores, ds.labels.as_ref().unwrap()).map_err(|e| e.to_string())?);
            }
            let m = median(aucs);
            lines.push(format!("{set}/{kind} {m:.3}"));
            if m < threshold {
                failed.push(format!("{set}/{kind} median AUC {m:.3} < {threshold}"));
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(120) {
        failed.push(format!("took {elapsed:?}"));
    }
    if failed.is_empty() {
        Ok(format!("{} ({elapsed:.1?})", lines.join(", ")))
    } else {
        Err(format!("{}; all: {}", failed.join("; "), lines.join(", ")))
    }
}

fn criterion_7() -> Outcome {
    let resolution = 120;
    let mut worst_integral = 0.0f64;
    let mut summary = Vec::new();
    for (set, mode, tail) in [
        (SyntheticSet::Gauss2d, [0.0, 0.0], [4.0, 0.0]),
        (SyntheticSet::GaussMix2d, [5.0, 5.0], [5.0 + 4.0 * 0.6, 5.0]),
    ] {
        for kind in [ModelKind::Streaming, ModelKind::Batch] {
            let mut ordered = 0;
            for seed in 0..20u64 {
                let ds = gen_synthetic(set, 5000, 0, 700 + seed).map_err(|e| e.to_string())?;
                let cfg = TreeConfig {
                    seed,
                    ..TreeConfig::default()
                };
                let forest = Forest::fit(&ds.rows, &cfg, kind, 10).map_err(|e| e.to_string())?;
                let bounds = BoundingBox::of_points(ds.rows.rows()).map_err(|e| e.to_string())?;
                let cells = density_grid(&forest, &bounds, resolution).map_err(|e| e.to_string())?;
                let integral: f64 = cells.iter().map(|c| c.density).sum::<f64>() * cell_volume(&bounds, resolution);
                worst_integral = worst_integral.max((integral - 1.0).abs());
                let cell_of = |x: [f64; 2]| -> Vec<f64> {
                    (0..2)
                        .map(|d| {
                            let step = bounds.side(d) / resolution as f64;
                            let i = ((x[d] - bounds.lower()[d]) / step).floor().clamp(0.0, resolution as f64 - 1.0);
                            bounds.lower()[d] + (i + 0.5) * step
                        })
                        .collect()
                };
                let at = |x: [f64; 2]| forest.density(&cell_of(x)).map_err(|e| e.to_string());
                if at(mode)? > at(tail)? {
                    ordered += 1;
                }
            }
            summary.push(format!("{set}/{kind} mode>tail {ordered}/20"));
            ensure(ordered >= 19, || format!("{set}/{kind}: mode above tail in only {ordered}/20 seeds"))?;
        }
    }
    ensure(worst_integral <= 0.05, || format!("grid integral off by {worst_integral:.4}"))?;
    Ok(format!("max |∫−1| = {worst_integral:.4}; {}", summary.join(", ")))
}

fn criterion_8() -> Outcome {
    let mut rng = RngState::new(8);
    let mut forests = Vec::new();
    for k in 0..10u64 {
        let data = uniform_matrix(&mut rng, 60, 2);
        let cfg = TreeConfig {
            seed: k,
            max_depth: 4 + k as usize % 4,
            ..TreeConfig::default()
        };
        let kind = if k % 2 == 0 { ModelKind::Streaming } else { ModelKind::Batch };
        forests.push(Forest::fit(&data, &cfg, kind, 7).unwrap());
    }
    let mut violations = 0;
    let triples = 10_000;
    for _ in 0..triples {
        let f = &forests[(rng.next_unit() * forests.len() as f64) as usize];
        let x = [rng.next_unit() * 1.2 - 0.1, rng.next_unit() * 1.2 - 0.1];
        let (mut e1, mut e2) = (rng.next_unit() * 0.3, rng.next_unit() * 0.3);
        if e1 > e2 {
            std::mem::swap(&mut e1, &mut e2);
        }
        let (mut p1, mut p2) = (rng.next_unit(), rng.next_unit());
        if p1 > p2 {
            std::mem::swap(&mut p1, &mut p2);
        }
        let tree = (rng.next_unit() * f.n_trees() as f64) as usize;
        if f.epsilon_anomaly(tree, &x, e1).unwrap() && !f.epsilon_anomaly(tree, &x, e2).unwrap() {
            violations += 1;
        }
        let phi = rng.next_unit();
        if f.eps_phi_anomaly(&x, e1, phi).unwrap().flag && !f.eps_phi_anomaly(&x, e2, phi).unwrap().flag {
            violations += 1;
        }
        if f.eps_phi_anomaly(&x, e1, p2).unwrap().flag && !f.eps_phi_anomaly(&x, e1, p1).unwrap().flag {
            violations += 1;
        }
        let mass = f.per_tree(&x).unwrap()[tree].0;
        if is_epsilon_anomaly(mass, e1) && !is_epsilon_anomaly(mass, e2) {
            violations += 1;
        }
        let count = (rng.next_unit() * 8.0) as usize;
        if meets_vote(count, 7, p2) && !meets_vote(count, 7, p1) {
            violations += 1;
        }
    }
    ensure(violations == 0, || format!("{violations} violations"))?;
    // forests are only used through the public surface here
    debug_assert!(forests.iter().all(|f| matches!(f.trees(), Trees::Batch(_) | Trees::Streaming(_))));
    Ok(format!("{triples} random triples, 0 violations"))
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    results.push((1, "golden worked example", criterion_1()));
    let start = Instant::now();
    let fixtures = build_random_forests();
    let elapsed = start.elapsed();
    results.push((2, "mass conservation", criterion_2(&fixtures, elapsed)));
    results.push((3, "conjugacy", criterion_3(&fixtures)));
    results.push((4, "insert/delete round trip", criterion_4()));
    results.push((5, "online/offline equivalence", criterion_5()));
    results.push((6, "synthetic AUC", criterion_6()));
    results.push((7, "density sanity", criterion_7()));
    results.push((8, "threshold monotonicity", criterion_8()));

    let mut failures = 0;
    for (n, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("[PASS] criterion {n} ({name}): {detail}"),
            Err(detail) => {
                failures += 1;
                println!("[FAIL] criterion {n} ({name}): {detail}");
            }
        }
    }
    println!("{} passed, {failures} failed", results.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
