mod quickstart_example {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/quickstart.rs"));
}

#[test]
fn quickstart_runs() {
    quickstart_example::run_example().expect("quickstart example should run");
}

mod dependent_sources_example {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/dependent_sources.rs"));
}

#[test]
fn dependent_sources_runs() {
    dependent_sources_example::run_example().expect("dependent_sources example should run");
}

mod multitask_chain_example {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/multitask_chain.rs"));
}

#[test]
fn multitask_chain_runs() {
    multitask_chain_example::run_example().expect("multitask_chain example should run");
}

mod streaming_drift_example {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/streaming_drift.rs"));
}

#[test]
fn streaming_drift_runs() {
    streaming_drift_example::run_example().expect("streaming_drift example should run");
}

mod multiclass_example {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/multiclass.rs"));
}

#[test]
fn multiclass_runs() {
    multiclass_example::run_example().expect("multiclass example should run");
}

mod file_workflow_example {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/file_workflow.rs"));
}

#[test]
fn file_workflow_runs() {
    file_workflow_example::run_example().expect("file_workflow example should run");
}

mod triplet_choices_example {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/triplet_choices.rs"));
}

#[test]
fn triplet_choices_runs() {
    triplet_choices_example::run_example().expect("triplet_choices example should run");
}
