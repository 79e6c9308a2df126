use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dtopsc::generator::{bundled_coordinates, generate_instance, GeneratorConfig};
use dtopsc::harness::{
    agg_gap, mean_sd, read_references, report_rows, run_batch, write_table, BatchInstance, MetricsRow, NamedPolicy,
    References, RunFile, COLUMNS,
};
use dtopsc::simulator::{simulate, PolicyConfig};
use dtopsc::AlnsConfig;

fn quick(policy: PolicyConfig) -> PolicyConfig {
    PolicyConfig {
        alns: AlnsConfig::default().with_iterations(100),
        alns_init: AlnsConfig::default().with_iterations(200),
        ..policy
    }
}

fn batch() -> (Vec<BatchInstance>, Vec<NamedPolicy>, BTreeMap<String, References>) {
    let coords = bundled_coordinates();
    let mut instances: Vec<BatchInstance> = (0..2)
        .map(|k| BatchInstance {
            id: format!("inst{k}"),
            instance: generate_instance(
                &GeneratorConfig { workers: 2, tasks: 12, seed: k, ..GeneratorConfig::default() },
                &coords,
            )
            .map_err(|e| e.to_string()),
        })
        .collect();
    instances.push(BatchInstance { id: "broken".into(), instance: Err("unreadable".into()) });
    let policies = vec![
        NamedPolicy { name: "myopic".into(), config: quick(PolicyConfig::myopic(0)) },
        NamedPolicy {
            name: "scenario".into(),
            config: PolicyConfig { scenarios: 3, ..quick(PolicyConfig::scenario(0)) },
        },
    ];
    let mut refs = BTreeMap::new();
    refs.insert("inst0".to_string(), References { z_mip: Some(3.0), z_cp: Some(4.0) });
    refs.insert("inst1".to_string(), References { z_mip: Some(0.0), z_cp: None });
    (instances, policies, refs)
}

fn table(rows: &[MetricsRow], timings: bool) -> String {
    let mut out = Vec::new();
    write_table(&mut out, rows, timings).unwrap();
    String::from_utf8(out).unwrap()
}

fn records(text: &str) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(text.as_bytes()).records().map(|r| r.unwrap()).collect()
}

#[test]
fn batch_table_layout() {
    let (instances, policies, refs) = batch();
    let rows = run_batch(&instances, &policies, &[1, 2], &refs).unwrap();
    assert_eq!(rows.len(), 12);
    assert_eq!(rows.iter().filter(|r| r.error.is_some()).count(), 4);

    let text = table(&rows, true);
    let header = text.lines().next().unwrap();
    assert_eq!(header, COLUMNS.join(","));
    let recs = records(&text);
    assert_eq!(recs.len(), 12 + 2);
    let data = &recs[..12];
    let keys: Vec<(String, String, String)> =
        data.iter().map(|r| (r[0].to_string(), r[1].to_string(), r[2].to_string())).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);

    for r in data.iter().filter(|r| &r[0] == "inst1") {
        assert_eq!(&r[6], "", "zero MIP reference has no gap");
        assert_eq!(&r[7], "");
    }
    for r in rows.iter().filter(|r| r.instance == "inst0") {
        assert!((r.gap_cp.unwrap() - 100.0 * (4.0 - r.profit) / 4.0).abs() < 1e-12);
        assert!((r.gap_mip.unwrap() - 100.0 * (3.0 - r.profit) / 3.0).abs() < 1e-12);
    }
    for r in data.iter().filter(|r| &r[0] == "broken") {
        assert_eq!(&r[13], "unreadable");
    }

    for summary in &recs[12..] {
        assert_eq!(&summary[0], "summary");
        let ok: Vec<&MetricsRow> = rows.iter().filter(|r| r.policy == summary[1] && r.error.is_none()).collect();
        let profits: Vec<f64> = ok.iter().map(|r| r.profit).collect();
        let n = profits.len() as f64;
        let mean = profits.iter().sum::<f64>() / n;
        let sd = (profits.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert_eq!(&summary[3], format!("{mean:.2}"));
        assert!((summary[12].parse::<f64>().unwrap() - sd).abs() <= 0.006);
        let served: usize = ok.iter().map(|r| r.served).sum();
        assert_eq!(summary[10].parse::<usize>().unwrap(), served);
    }
}

#[test]
fn table_is_byte_identical_without_timings() {
    let (instances, policies, refs) = batch();
    let a = run_batch(&instances, &policies, &[3], &refs).unwrap();
    let mut b = run_batch(&instances, &policies, &[3], &refs).unwrap();
    b.reverse();
    assert_eq!(table(&a, false), table(&b, false));
}

#[test]
fn textbook_standard_deviation() {
    let xs = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
    let (mean, sd) = mean_sd(&xs);
    assert_eq!(mean, 5.0);
    assert!((sd.unwrap() - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
    assert_eq!(mean_sd(&[1.0]).1, None);
}

#[test]
fn aggregate_gap_over_random_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let rows: Vec<(f64, f64)> = (0..10).map(|_| (rng.gen_range(1.0..80.0), rng.gen_range(0.0..80.0))).collect();
        let (mip, pol) = rows.iter().fold((0.0, 0.0), |(a, b), (m, p)| (a + m, b + p));
        let expected = (mip - pol) / mip * 100.0;
        assert!((agg_gap(mip, pol).unwrap() - expected).abs() < 1e-9);
    }
    assert!(agg_gap(0.0, 1.0).is_err());
}

#[test]
fn report_from_run_files() {
    let dir = tempfile::tempdir().unwrap();
    let coords = bundled_coordinates();
    let inst =
        generate_instance(&GeneratorConfig { workers: 2, tasks: 10, seed: 5, ..GeneratorConfig::default() }, &coords)
            .unwrap();
    let mut runs = Vec::new();
    for seed in 0..3 {
        let record = simulate(&inst, &quick(PolicyConfig::myopic(seed))).unwrap();
        let run = RunFile { instance: "g5".into(), policy: "myopic".into(), seed, record };
        run.save(dir.path().join(format!("run_{seed}.json"))).unwrap();
        assert_eq!(RunFile::load(dir.path().join(format!("run_{seed}.json"))).unwrap(), run);
        runs.push(run);
    }
    let refs_path = dir.path().join("refs.csv");
    std::fs::write(&refs_path, "instance,z_mip,z_cp\ng5,2.5,\nother,,1.0\n").unwrap();
    let refs = read_references(&refs_path).unwrap();
    assert_eq!(refs["g5"], References { z_mip: Some(2.5), z_cp: None });
    assert_eq!(refs["other"], References { z_mip: None, z_cp: Some(1.0) });

    let rows = report_rows(dir.path(), &refs).unwrap();
    assert_eq!(rows.len(), 3);
    for (row, run) in rows.iter().zip(&runs) {
        assert_eq!(row, &MetricsRow::from_run(run, refs["g5"]));
        let expected = 100.0 * (2.5 - run.record.profit) / 2.5;
        assert!((row.gap_mip.unwrap() - expected).abs() < 1e-12);
        assert_eq!(row.gap_cp, None);
    }
}
