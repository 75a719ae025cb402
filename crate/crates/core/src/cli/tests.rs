use super::config::*;
use super::report::quantile;
use super::*;
use crate::estimator::RankRule;

const PARITY: &str = r#"
seed = 11

[link]
kind = "parity"
s = 2
sigma = 0.1

[data]
d = 12
n = 600
"#;

#[test]
fn parses_flat_sections_with_defaults() {
    let cfg = ExperimentConfig::from_toml(PARITY).unwrap();
    assert_eq!(cfg.seed, 11);
    assert_eq!(cfg.d_values(), vec![12]);
    assert_eq!(cfg.data.trials, 1);
    assert_eq!(cfg.kernel_choice().unwrap(), KernelChoice::Oracle);
    assert_eq!(cfg.rank_rules(1).unwrap(), None);
    assert_eq!(cfg.scaling.threshold, 0.3);
}

#[test]
fn toml_round_trip() {
    let mut cfg = ExperimentConfig::from_toml(PARITY).unwrap();
    cfg.estimator.degrees = Some(vec![2]);
    cfg.estimator.ranks = RanksSetting::Fixed(vec![[2, 2]]);
    cfg.data.d = Grid::Many(vec![12, 24]);
    let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn json_and_embedded_config_load() {
    let cfg = ExperimentConfig::from_toml(PARITY).unwrap();
    let bare = serde_json::to_string(&cfg).unwrap();
    assert_eq!(ExperimentConfig::from_json(&bare).unwrap(), cfg);
    let wrapped = format!("{{\"command\":\"estimate\",\"config\":{bare}}}");
    assert_eq!(ExperimentConfig::from_json(&wrapped).unwrap(), cfg);
}

fn err_of(text: &str) -> String {
    ExperimentConfig::from_toml(text).unwrap_err().to_string()
}

#[test]
fn validation_names_the_field() {
    assert!(err_of(&PARITY.replace("d = 12\n", "")).contains("missing field `d`"));
    assert!(err_of(&PARITY.replace("d = 12", "d = []")).contains("nonempty"));
    assert!(err_of(&PARITY.replace("d = 12", "d = 2")).contains("data.d"));
    assert!(err_of(&PARITY.replace("n = 600", "n = 600\ntrials = 0")).contains("trials"));
    assert!(err_of(&format!("{PARITY}\n[estimator]\ndegrees = [2, 2, 2]\n")).contains("rank s = 2"));
    assert!(err_of(&format!("{PARITY}\n[estimator]\ndegrees = [5]\n")).contains("degree 5"));
    assert!(err_of(&format!("{PARITY}\n[estimator]\nkernel = \"magic\"\n")).contains("estimator.kernel"));
    assert!(err_of(&format!("{PARITY}\n[estimator]\ndegrees = [2]\nranks = [[2, 3]]\n")).contains("s0"));
    assert!(err_of(&format!("{PARITY}\n[estimator]\nranks = [[2, 2]]\n")).contains("explicit"));
    assert!(err_of(&format!("{PARITY}\n[scaling]\nthreshold = 0.0\n")).contains("threshold"));
    assert!(err_of(&format!("{PARITY}\n[scaling]\nratios = []\n")).contains("ratios"));
    assert!(err_of(&format!("{PARITY}\n[planner]\nmax_degree = 9\n")).contains("max_degree"));
    assert!(err_of(&format!("{PARITY}\nunknown_key = 1\n")).contains("unknown_key"));
}

#[test]
fn rank_settings() {
    let cfg = ExperimentConfig::from_toml(&format!("{PARITY}\n[estimator]\ndegrees = [2]\nranks = \"adaptive\"\n")).unwrap();
    assert_eq!(cfg.rank_rules(1).unwrap(), Some(vec![RankRule::Adaptive]));
    let cfg = ExperimentConfig::from_toml(&format!("{PARITY}\n[estimator]\ndegrees = [2]\nranks = [[2, 2]]\n")).unwrap();
    assert_eq!(cfg.rank_rules(1).unwrap(), Some(vec![RankRule::Fixed { t: 2, s0: 2 }]));
    let cfg = ExperimentConfig::from_toml(&format!("{PARITY}\n[estimator]\nkernel = \"table:k.json\"\n")).unwrap();
    assert_eq!(cfg.kernel_choice().unwrap(), KernelChoice::Table("k.json".into()));
}

#[test]
fn exit_codes() {
    use crate::error::Error;
    assert_eq!(exit_code(&Error::Config("x".into())), EXIT_CONFIG);
    assert_eq!(exit_code(&Error::Stall("x".into())), EXIT_STALL);
    assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), EXIT_IO);
    assert_eq!(exit_code(&Error::Format("x".into())), EXIT_IO);
}

#[test]
fn quantiles_interpolate() {
    let v = [1.0, 2.0, 3.0, 4.0];
    assert_eq!(quantile(&v, 0.5), 2.5);
    assert_eq!(quantile(&v, 0.0), 1.0);
    assert_eq!(quantile(&v, 1.0), 4.0);
    assert_eq!(quantile(&[7.0], 0.25), 7.0);
}

#[test]
fn trial_seeds_depend_on_every_coordinate() {
    let base = trial_seed(1, 20, 400, 0);
    assert_ne!(base, trial_seed(2, 20, 400, 0));
    assert_ne!(base, trial_seed(1, 40, 400, 0));
    assert_ne!(base, trial_seed(1, 20, 800, 0));
    assert_ne!(base, trial_seed(1, 20, 400, 1));
    assert_eq!(base, trial_seed(1, 20, 400, 0));
}

#[test]
fn missing_config_flag_is_a_config_error() {
    assert_eq!(run(["smim", "generate"]), EXIT_CONFIG);
    assert_eq!(run(["smim", "bogus"]), EXIT_CONFIG);
}
