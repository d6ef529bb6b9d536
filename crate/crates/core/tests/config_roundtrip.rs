//! A spec written out as config text and read back is unchanged.

use ksduo::config::{parse_config, Command, ExperimentSpec, SweepAxis};
use ksduo::solver::{Advection, Scheme};
use proptest::prelude::*;
use std::path::PathBuf;

fn spec_strategy() -> impl Strategy<Value = ExperimentSpec> {
    let params = (
        prop::array::uniform10(-1e6f64..1e6),
        prop::sample::select(vec![
            Command::Table,
            Command::Bifurcation,
            Command::Simulate,
            Command::Sweep,
            Command::Analyze,
        ]),
    );
    let solver = (
        prop::array::uniform4(1e-9f64..1e3),
        1usize..100_000,
        1usize..1000,
        any::<bool>(),
        any::<bool>(),
        any::<bool>(),
    );
    let extra = (
        prop::option::of(prop::collection::vec(-1e3f64..1e3, 1..6)),
        1u32..500,
        0usize..64,
        any::<bool>(),
        prop::option::of("[a-z]{1,8}"),
    );
    (params, solver, extra).prop_map(|((v, command), (s, snap, ser, stop, explicit, upwind), (sweep, kmax, workers, plots, input))| {
        let mut spec = ExperimentSpec {
            command,
            ..ExperimentSpec::default()
        };
        for (name, x) in ksduo::model::PARAM_NAMES.iter().zip(v) {
            spec.params.set(name, x);
        }
        spec.solver.dx = s[0];
        spec.solver.dt = s[1];
        spec.solver.t_end = s[2];
        spec.solver.steady_tol = s[3];
        spec.solver.snapshot_every = snap;
        spec.solver.series_every = ser;
        spec.solver.stop_when_steady = stop;
        spec.solver.scheme = if explicit { Scheme::Explicit } else { Scheme::SemiImplicit };
        spec.solver.advection = if upwind { Advection::Upwind } else { Advection::Central };
        spec.sweep = sweep.map(|values| SweepAxis {
            name: "chi".into(),
            values,
        });
        spec.kmax = kmax;
        spec.rows = kmax / 2 + 1;
        spec.workers = workers;
        spec.emit_plots = plots;
        spec.input_dir = input.map(PathBuf::from);
        spec
    })
}

proptest! {
    #[test]
    fn config_text_round_trips(spec in spec_strategy()) {
        let text = spec.to_config_string();
        let back = parse_config(&text).unwrap();
        prop_assert_eq!(back, spec);
    }
}

#[test]
fn defaults_round_trip() {
    let spec = ExperimentSpec::default();
    assert_eq!(parse_config(&spec.to_config_string()).unwrap(), spec);
}
