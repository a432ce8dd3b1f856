use elsim::dynamics::{Params, State};
use elsim::formats::{
    decode_checkpoint, encode_checkpoint, parse_series, series_header, Checkpoint, Family, FormatError, ScenarioConfig,
};
use elsim::spectral::{Grid, GridSpec};
use proptest::prelude::*;

fn small_config() -> ScenarioConfig {
    ScenarioConfig { dim: 2, n_points: 16, box_length: 32.0, horizon: 4.0, support_radius: 4.0, ..ScenarioConfig::flagship() }
}

#[test]
fn config_round_trips_through_json() {
    let c = small_config();
    assert_eq!(ScenarioConfig::from_json(&c.to_json()).unwrap(), c);
}

#[test]
fn config_rejects_unknown_and_missing_keys() {
    let mut v: serde_json::Value = serde_json::from_str(&small_config().to_json()).unwrap();
    v["colour"] = serde_json::json!(3);
    assert!(matches!(ScenarioConfig::from_json(&v.to_string()), Err(FormatError::Config(_))));
    let mut v: serde_json::Value = serde_json::from_str(&small_config().to_json()).unwrap();
    v.as_object_mut().unwrap().remove("seed");
    assert!(ScenarioConfig::from_json(&v.to_string()).is_err());
}

#[test]
fn config_validation() {
    let ok = small_config();
    assert!(ok.validate().is_ok());
    let cases = [
        ScenarioConfig { dim: 4, ..ok.clone() },
        ScenarioConfig { n_points: 15, ..ok.clone() },
        ScenarioConfig { mu: 0.0, ..ok.clone() },
        ScenarioConfig { sigma0: -1.0, ..ok.clone() },
        ScenarioConfig { epsilon: f64::NAN, ..ok.clone() },
        ScenarioConfig { sample_dt: 0.0, ..ok.clone() },
        ScenarioConfig { kappa_max: 9, ..ok.clone() },
        ScenarioConfig { horizon: 12.0, ..ok.clone() },
        ScenarioConfig { dim: 1, family: Family::TaylorGreen, ..ok.clone() },
        ScenarioConfig { dim: 1, family: Family::Mixed, ..ok.clone() },
    ];
    for c in cases {
        assert!(c.validate().is_err(), "{c:?}");
    }
    // support only matters for localized families
    let geo = ScenarioConfig { family: Family::Geodesic, horizon: 100.0, ..ok };
    assert!(geo.validate().is_ok());
}

#[test]
fn flagship_header_layout() {
    let h = series_header(2).join(",");
    assert_eq!(
        h,
        "t,E_v_0,E_v_1,E_v_2,E_d_1,E_d_2,E_d_3,X_d_2,X_d_3,linf_v,linf_grad_v,linf_grad2_v,linf_dtv,\
         linf_dZd_0,linf_dZd_1,linf_dZd_2,good_unknown,nullform_ratio,mod_energy,div_v_max,\
         constraint_drift,boundary_mass"
    );
}

#[test]
fn series_parsing() {
    let s = parse_series(b"t, a ,b\n0,1,2\n1.5,3e-1,-4\n").unwrap();
    assert_eq!(s.columns, ["t", "a", "b"]);
    assert_eq!(s.pairs("a").unwrap(), vec![(0.0, 1.0), (1.5, 0.3)]);
    assert!(s.column("c").is_none());
    assert!(parse_series(b"x,y\n1,2\n").is_err());
    assert!(parse_series(b"t,y\n1,abc\n").is_err());
    assert!(parse_series(b"t,y\n1\n").is_err());
}

fn checkpoint(dim: usize, n: usize, seed: u64) -> Checkpoint {
    let g = Grid::new(dim, n, 3.0).unwrap();
    let mut s = State::equilibrium(&g, [0.0, 0.0, 1.0]);
    s.t = 1.25;
    let mut x = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let mut next = || {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        f64::from_bits(x >> 2) // arbitrary bit patterns, including subnormals
    };
    for f in s.v.iter_mut().chain(s.d.iter_mut()).chain(s.q.iter_mut()) {
        for y in f.iter_mut() {
            *y = next();
        }
    }
    let nonlinear = (0..dim).map(|_| (0..g.len()).map(|_| next()).collect()).collect();
    Checkpoint { grid: g.spec(), params: Params { sigma1: 0.5, ..Params::default() }, state: s, nonlinear }
}

fn bits(c: &Checkpoint) -> Vec<u64> {
    let s = &c.state;
    s.v.iter().chain(&s.d).chain(&s.q).chain(&c.nonlinear).flatten().map(|x| x.to_bits()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn checkpoint_round_trip_is_bit_exact(dim in 1usize..=3, seed in any::<u64>()) {
        let c = checkpoint(dim, 4, seed);
        let back = decode_checkpoint(&encode_checkpoint(&c)).unwrap();
        prop_assert_eq!(back.grid, c.grid);
        prop_assert_eq!(back.params, c.params);
        prop_assert_eq!(back.state.t.to_bits(), c.state.t.to_bits());
        prop_assert_eq!(bits(&back), bits(&c));
    }
}

#[test]
fn checkpoint_decoding_rejects_damage() {
    let c = checkpoint(2, 8, 1);
    let bytes = encode_checkpoint(&c);
    assert!(decode_checkpoint(&bytes[..bytes.len() - 1]).is_err());
    assert!(decode_checkpoint(b"no newline").is_err());
    let nl = bytes.iter().position(|b| *b == b'\n').unwrap();
    let header = std::str::from_utf8(&bytes[..nl]).unwrap().replace("\"q\"", "\"w\"");
    let mut bad = header.into_bytes();
    bad.extend_from_slice(&bytes[nl..]);
    assert!(matches!(decode_checkpoint(&bad), Err(FormatError::Checkpoint(_))));
    let huge = GridSpec { dim: 3, n: 1 << 20, box_length: 1.0, dealias_fraction: 2.0 / 3.0 };
    let mut big = Checkpoint { grid: huge, ..c };
    big.nonlinear.clear();
    assert!(decode_checkpoint(&encode_checkpoint(&big)).is_err());
}
