//! Property tests for the model invariants.

use proptest::prelude::*;

use interlock::earthworks::{BladeCut, BladeLoad, Sweep, TerrainGrid};
use interlock::locomotion::{
    half_cycle, turn_in_place, wrap_degrees, SimParams, Site, StrokeCommand, VehicleSpec,
    VehicleState,
};
use interlock::planner::{execute_plan, plan_pad, PadSpec, PlanOptions};
use interlock::raster::GridSpec;
use interlock::sensing::{
    build_raster, lower_bound_strength, mean_strength, Aggregation, EventRecord, Property,
};
use interlock::soil::{Duricrust, Environment, SoilLayer, SoilMap, SoilProfile};
use interlock::traction::{
    anchoring_work, flip_margin, friction_baseline, pull_weight_ratio, tractive_efficiency,
    ForceBalance, SpikeGeometry,
};

fn preset_soil() -> impl Strategy<Value = SoilProfile> {
    prop_oneof![
        Just(SoilProfile::soft()),
        Just(SoilProfile::medium()),
        Just(SoilProfile::hard())
    ]
}

fn preset_env() -> impl Strategy<Value = Environment> {
    prop_oneof![
        Just(Environment::earth()),
        Just(Environment::moon()),
        Just(Environment::mars())
    ]
}

fn layered_soil() -> impl Strategy<Value = SoilProfile> {
    prop::collection::vec((0.05f64..0.5, 1e5f64..2e6), 1..5).prop_map(|layers| {
        let mut q = 0.0;
        let layers = layers
            .into_iter()
            .map(|(thickness, step)| SoilLayer {
                thickness,
                cone_resistance: {
                    q += step;
                    q
                },
                density_scale: 1.0,
                friction_mu: 0.5,
            })
            .collect();
        SoilProfile::new("layered", layers, None, 35.0, 0.1).unwrap()
    })
}

fn flat_site(env: Environment, soil: SoilProfile, extent: f64) -> Site {
    Site {
        terrain: TerrainGrid::flat(
            GridSpec::centered((0.0, 0.0), extent, 0.25).unwrap(),
            0.0,
            1.3,
        )
        .unwrap(),
        soils: SoilMap::uniform(soil),
        env,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn resistance_is_piecewise_constant_and_total(soil in layered_soil(), d in 0.0f64..3.0) {
        let q = soil.resistance_at(d).unwrap();
        prop_assert!(q >= 0.0);
        prop_assert!(soil.layers.iter().any(|l| l.cone_resistance == q));
        // constant within a layer: a point just below shares the value unless a boundary lies between
        let mut top = 0.0;
        let boundary_between = soil.layers.iter().any(|l| {
            top += l.thickness;
            top > d && top <= d + 1e-6
        });
        if !boundary_between {
            prop_assert_eq!(soil.resistance_at(d + 1e-6).unwrap(), q);
        }
    }

    #[test]
    fn crust_breaking_is_monotone_in_force(strength in 1e5f64..5e6, f in 0.0f64..100.0, extra in 0.0f64..100.0, area in 1e-6f64..1e-4) {
        let soil = SoilProfile::soft().with_duricrust(Duricrust { strength, thickness: 0.02 });
        if soil.duricrust_break_check(f, area) {
            prop_assert!(soil.duricrust_break_check(f + extra, area));
        }
    }

    #[test]
    fn pull_weight_decreases_with_beta(a in 0.1f64..89.8, gap in 0.01f64..0.1) {
        prop_assert!(pull_weight_ratio(a + gap).unwrap() < pull_weight_ratio(a).unwrap());
    }

    #[test]
    fn halving_beta_doubles_pull_weight_at_small_angles(beta in 0.01f64..8.0) {
        let r = pull_weight_ratio(beta / 2.0).unwrap() / pull_weight_ratio(beta).unwrap();
        prop_assert!((2.0..=2.01).contains(&r), "{}", r);
        // tan β / tan(β/2) = 2 / (1 - tan²(β/2))
        let t = (beta / 2.0).to_radians().tan();
        prop_assert!((r - 2.0 / (1.0 - t * t)).abs() < 1e-9);
    }

    #[test]
    fn friction_scales_linearly_with_gravity(mass in 1.0f64..1000.0, mu in 0.05f64..1.0, env in preset_env()) {
        let earth = Environment::earth();
        let ratio = friction_baseline(mass, &earth, mu) / friction_baseline(mass, &env, mu);
        prop_assert!((ratio - earth.gravity / env.gravity).abs() < 1e-9);
    }

    #[test]
    fn anchoring_work_is_linear(f in 0.0f64..5000.0, a in prop::sample::select(vec![0.5, 2.0, 4.0, 10.0]), soil in preset_soil()) {
        let (scaled, base) = (anchoring_work(a * f, &soil), anchoring_work(f, &soil));
        prop_assert!((scaled - a * base).abs() <= 1e-12 * scaled.abs().max(1.0));
    }

    #[test]
    fn thrust_angle_increases_with_depth(d in 0.0f64..0.19, gap in 0.001f64..0.01) {
        let g = SpikeGeometry::reference();
        prop_assert!(g.thrust_angle(d + gap).unwrap() > g.thrust_angle(d).unwrap());
    }

    #[test]
    fn flip_margin_decreases_with_draft(d in 0.0f64..2000.0, gap in 0.1f64..100.0, beta in 1.0f64..60.0, w in 10.0f64..5000.0) {
        prop_assert!(flip_margin(d + gap, beta, w).margin < flip_margin(d, beta, w).margin);
    }

    #[test]
    fn thrust_at_least_draft(blade in 0.0f64..1000.0, ripper in 0.0f64..1000.0, beta in 0.0f64..60.0) {
        let fb = ForceBalance::new(blade, ripper, beta, 20.0);
        prop_assert!(fb.thrust >= fb.draft);
        if beta == 0.0 {
            prop_assert_eq!(fb.thrust, fb.draft);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn anchored_spikes_stay_put_and_work_balances(
        heading in -180.0f64..180.0,
        draft in 0.0f64..150.0,
        soil in preset_soil(),
        env in preset_env(),
        strokes in 1usize..5,
    ) {
        let spec = VehicleSpec::reference();
        let mut site = flat_site(env, soil, 30.0);
        let params = SimParams::default();
        let mut st = VehicleState::new(&spec, (0.0, 0.0), heading);
        let cmd = StrokeCommand { external_draft: draft, ..Default::default() };
        for _ in 0..strokes {
            let moving = st.phase.moving_frame();
            let before = st.frame_center(moving);
            let o = half_cycle(&mut st, &spec, &mut site, &cmd, None, &params).unwrap();
            prop_assert!(o.anchor_drift < 1e-9);
            let r = &o.record;
            prop_assert!(r.motor_work(params.motor_efficiency) >= r.useful_work);
            if r.useful_work + r.anchoring_work + r.extraction_work > 0.0 {
                let e = tractive_efficiency(r).unwrap();
                prop_assert!(e > 0.0 && e <= 1.0);
            }
            // the moving frame advances by the stroke less slip along the unchanged heading
            let after = st.frame_center(moving);
            let (ux, uy) = unit(heading);
            let along = (after.0 - before.0) * ux + (after.1 - before.1) * uy;
            let across = (after.0 - before.0) * -uy + (after.1 - before.1) * ux;
            prop_assert!((along - r.stroke_advance).abs() < 1e-9, "{} vs {}", along, r.stroke_advance);
            prop_assert!(across.abs() < 1e-9);
            prop_assert_eq!(st.heading, heading);
        }
    }

    #[test]
    fn no_motion_without_anchorage(heading in -180.0f64..180.0, draft in 400.0f64..2000.0) {
        let spec = VehicleSpec::reference();
        let crust = Duricrust { strength: 5e6, thickness: 0.02 };
        let mut site = flat_site(Environment::moon(), SoilProfile::soft().with_duricrust(crust), 20.0);
        let mut st = VehicleState::new(&spec, (0.0, 0.0), heading);
        let p0 = st.pose();
        let cmd = StrokeCommand { external_draft: draft, ..Default::default() };
        let o = half_cycle(&mut st, &spec, &mut site, &cmd, None, &SimParams::default()).unwrap();
        prop_assert!(o.record.stuck);
        prop_assert_eq!(st.pose(), p0);
    }

    #[test]
    fn turning_terminates_at_the_target(target in -180.0f64..180.0, soil in preset_soil()) {
        let spec = VehicleSpec::reference();
        let mut site = flat_site(Environment::earth(), soil, 40.0);
        let params = SimParams::default();
        let mut st = VehicleState::new(&spec, (0.0, 0.0), 0.0);
        let t = turn_in_place(&mut st, target, &spec, &mut site, &params).unwrap();
        prop_assert!(wrap_degrees(st.heading - target).abs() < params.heading_tolerance);
        prop_assert!(t.half_cycles.iter().all(|o| o.anchor_drift < 1e-9));
    }
}

#[derive(Debug, Clone)]
enum Op {
    Heap {
        x: f64,
        y: f64,
        h: f64,
    },
    Rip {
        from: (f64, f64),
        to: (f64, f64),
        depth: f64,
    },
    Doze {
        at: (f64, f64),
        heading: f64,
        depth: f64,
        steps: usize,
    },
    Relax {
        x: f64,
        y: f64,
    },
}

fn op() -> impl Strategy<Value = Op> {
    let p = || (-3.5f64..3.5, -3.5f64..3.5);
    prop_oneof![
        (p(), 0.05f64..1.0).prop_map(|((x, y), h)| Op::Heap { x, y, h }),
        (p(), p(), 0.0f64..0.3).prop_map(|(from, to, depth)| Op::Rip { from, to, depth }),
        (p(), -180.0f64..180.0, 0.0f64..0.15, 1usize..20).prop_map(
            |(at, heading, depth, steps)| Op::Doze {
                at,
                heading,
                depth,
                steps
            }
        ),
        p().prop_map(|(x, y)| Op::Relax { x, y }),
    ]
}

fn field_tools() -> VehicleSpec {
    VehicleSpec::field()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn earthworks_conserve_volume(ops in prop::collection::vec(op(), 1..12)) {
        let grid = GridSpec::centered((0.0, 0.0), 8.0, 0.25).unwrap();
        let mut t = TerrainGrid::flat(grid, 0.0, 1.3).unwrap();
        let soils = SoilMap::uniform(SoilProfile::soft());
        let v = field_tools();
        let mut expected = t.bank_equivalent_volume();
        let mut load = BladeLoad::default();
        for op in ops {
            let bank_before: Vec<f64> = t.bank_floors().to_vec();
            match op {
                Op::Heap { x, y, h } => {
                    let i = grid.cell_of(x, y).unwrap();
                    t.add_loose(i, h);
                    expected += h * grid.cell_area() / 1.3;
                }
                Op::Rip { from, to, depth } => {
                    t.ripper_pass(&[from, to], depth, &v.ripper, &soils).unwrap();
                }
                Op::Doze { at, heading, depth, steps } => {
                    let (ux, uy) = unit(heading);
                    let mut sweep = Sweep::new(t.len());
                    let cut = BladeCut { depth, floor: None, region: None };
                    for k in 0..steps {
                        let p = (at.0 + 0.1 * k as f64 * ux, at.1 + 0.1 * k as f64 * uy);
                        let cells = t.footprint(p, heading, v.blade.width);
                        t.blade_cut_and_push(&mut load, &v.blade, &cells, &cut, &soils, &mut sweep, (p, heading), 9.81, 0.1);
                        prop_assert!(load.prism_volume <= v.blade.capacity + 1e-12);
                        prop_assert!((load.ledger_total() - load.prism_volume / 1.3).abs() < 1e-9);
                    }
                    let end = (at.0 + 0.1 * steps as f64 * ux, at.1 + 0.1 * steps as f64 * uy);
                    let cells = t.footprint(end, heading, v.blade.width);
                    t.deposit(&mut load, &cells, 35.0);
                }
                Op::Relax { x, y } => {
                    let i = grid.cell_of(x, y).unwrap();
                    t.repose_relax(&[i], 35.0);
                }
            }
            for (i, &before) in bank_before.iter().enumerate() {
                prop_assert!(t.loose_depth(i) >= 0.0);
                prop_assert!(t.bank_floor(i) <= before);
                prop_assert_eq!(t.surface(i), t.bank_floor(i) + t.loose_depth(i));
            }
            let now = t.bank_equivalent_volume() + load.prism_volume / 1.3;
            prop_assert!((now - expected).abs() / expected.abs().max(1.0) < 1e-9, "{} vs {}", now, expected);
        }
    }

    #[test]
    fn relaxing_twice_changes_nothing(heaps in prop::collection::vec((0usize..400, 0.1f64..2.0), 1..6), repose in 25.0f64..45.0) {
        let grid = GridSpec::centered((0.0, 0.0), 5.0, 0.25).unwrap();
        let mut t = TerrainGrid::flat(grid, 0.0, 1.3).unwrap();
        let seeds: Vec<usize> = heaps.iter().map(|&(i, _)| i).collect();
        for &(i, h) in &heaps {
            t.add_loose(i, h);
        }
        t.repose_relax(&seeds, repose);
        let once: Vec<f64> = t.surfaces();
        let all: Vec<usize> = (0..t.len()).collect();
        t.repose_relax(&all, repose);
        for (a, b) in once.iter().zip(t.surfaces()) {
            prop_assert!((a - b).abs() < 1e-6, "{} vs {}", a, b);
        }
        prop_assert!(t.max_loose_slope() <= repose + 0.5);
    }
}

fn event() -> impl Strategy<Value = EventRecord> {
    (
        -3.0f64..3.0,
        -3.0f64..3.0,
        prop::option::of((1e5f64..5e6, 0.0f64..2e6)),
        150.0f64..300.0,
    )
        .prop_map(|(x, y, q, temperature)| EventRecord {
            cycle_index: 0,
            x,
            y,
            depth_reached: 0.1,
            min_q: q.map(|(lo, _)| lo),
            mean_q: q.map(|(lo, extra)| lo + extra),
            temperature,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lower_bound_never_exceeds_mean(events in prop::collection::vec(event(), 0..40), x in -3.0f64..3.0, y in -3.0f64..3.0, r in 0.1f64..3.0) {
        if let (Some(lo), Some(mean)) = (lower_bound_strength(&events, (x, y), r), mean_strength(&events, (x, y), r)) {
            prop_assert!(lo <= mean);
        }
    }

    #[test]
    fn rasters_are_reproducible(mut events in prop::collection::vec(event(), 0..40)) {
        let grid = GridSpec::centered((0.0, 0.0), 6.0, 0.5).unwrap();
        let lo = build_raster(&events, &grid, Property::StrengthLowerBound, Aggregation::Min);
        prop_assert_eq!(&lo, &build_raster(&events, &grid, Property::StrengthLowerBound, Aggregation::Min));
        let mean = build_raster(&events, &grid, Property::StrengthMean, Aggregation::Mean);
        for i in 0..grid.len() {
            match (lo.values[i], mean.values[i]) {
                (Some(a), Some(b)) => prop_assert!(a <= b),
                (None, None) => prop_assert_eq!(lo.counts[i], 0),
                _ => prop_assert!(false, "cell {} mapped by one raster only", i),
            }
        }
        // the minimum does not depend on event order
        events.reverse();
        prop_assert_eq!(lo.values, build_raster(&events, &grid, Property::StrengthLowerBound, Aggregation::Min).values);
    }
}

fn pad_site() -> Site {
    flat_site(Environment::moon(), SoilProfile::soft(), 32.0)
}

fn forced() -> PlanOptions {
    PlanOptions {
        force_depth_override: true,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn plans_are_deterministic(radius in 1.0f64..3.0, depth in 0.3f64..0.5) {
        let (v, s, p) = (VehicleSpec::field(), pad_site(), SimParams::default());
        let pad = PadSpec::new((0.0, 0.0), radius, depth);
        let a = plan_pad(&pad, &v, &s, &p, &PlanOptions::default()).unwrap();
        let b = plan_pad(&pad, &v, &s, &p, &PlanOptions::default()).unwrap();
        prop_assert_eq!(a.to_text().unwrap(), b.to_text().unwrap());
    }

    #[test]
    fn predicted_energy_grows_with_radius_and_depth(radius in 1.0f64..2.5, grow in 0.3f64..1.0, depth in 0.1f64..0.25) {
        let (v, s, p) = (VehicleSpec::field(), pad_site(), SimParams::default());
        let plan = |r: f64, d: f64| plan_pad(&PadSpec::new((0.0, 0.0), r, d), &v, &s, &p, &forced()).unwrap();
        let base = plan(radius, depth).predicted_energy.total;
        prop_assert!(plan(radius + grow, depth).predicted_energy.total >= base);
        prop_assert!(plan(radius, depth + 0.1).predicted_energy.total >= base);
    }

    #[test]
    fn executed_pads_close_the_volume_audit(radius in 1.0f64..3.0, depth in 0.3f64..0.5) {
        let (v, s, p) = (VehicleSpec::field(), pad_site(), SimParams::default());
        let plan = plan_pad(&PadSpec::new((0.0, 0.0), radius, depth), &v, &s, &p, &PlanOptions::default()).unwrap();
        let run = execute_plan(&plan, &v, &s, &p, None);
        let r = &run.report;
        prop_assert!(r.failure.is_none());
        prop_assert!(r.audit.relative_error < 1e-9);
        prop_assert!(r.audit.closure_error < 1e-9);
    }
}

fn unit(heading: f64) -> (f64, f64) {
    let r = heading.to_radians();
    (r.cos(), r.sin())
}
