use caas_core::constellation::OrbitalShell;
use caas_core::ids::{SatelliteId, UeId};
use caas_core::sim::{
    bundled_scenario, compute_metrics, populate_ues, run, run_with, sweep_with, Event, EventLog,
    HoRecord, RateRecord, Scenario, SimContext, SimError, Strategy,
};

fn small(ues: usize, duration: f64) -> Scenario<f64> {
    let mut sc = bundled_scenario();
    sc.ue_count = ues;
    sc.duration_s = duration;
    sc
}

/// One equatorial satellite over a tiny area it passes early on.
fn lonely() -> Scenario<f64> {
    let mut sc = bundled_scenario();
    sc.shells = vec![OrbitalShell::new(0, 1, 1, 0.0, 550.0)];
    sc.area = caas_core::caas_control::GeoRect::new(0.0, 0.01, 10.0, 10.01).unwrap();
    sc.ue_count = 1;
    sc.duration_s = 900.0;
    sc
}

fn rate(t: f64, ue: u32, r: f64, served: bool) -> Event<f64> {
    let links = if served {
        vec![SatelliteId::new(0, 0, 0)]
    } else {
        Vec::new()
    };
    Event::Rate(RateRecord {
        t,
        ue_id: UeId(ue),
        rate_bps: r,
        links,
    })
}

fn ho(t: f64, from: u16, to: u16) -> HoRecord<f64> {
    HoRecord {
        t,
        ue_id: UeId(0),
        link_id: 0,
        from_sat: Some(SatelliteId::new(0, 0, from)),
        to_sat: Some(SatelliteId::new(0, 0, to)),
    }
}

#[test]
fn population() {
    let sc = bundled_scenario();
    assert!(populate_ues(&small(0, 600.0)).unwrap().is_empty());
    let mut big = sc.clone();
    big.ue_count = 120;
    let a = populate_ues(&big).unwrap();
    assert_eq!(a.len(), 120);
    assert_eq!(a, populate_ues(&big).unwrap());
    for u in &a {
        let p = u.position;
        assert!((0.0..=7.0).contains(&p.latitude_deg) && (95.0..=115.0).contains(&p.longitude_deg));
        assert!(u.default_shell < 2);
        let dual = u.requirement.demand_bps > sc.demand_mean_bps;
        assert_eq!(
            u.requirement.connectivity == caas_core::caas_control::Connectivity::Dual,
            dual
        );
        assert_eq!(u.requirement.demand_bps % sc.demand_unit_bps, 0.0);
    }
    // growing the population keeps the existing UEs
    let mut fewer = big.clone();
    fewer.ue_count = 40;
    assert_eq!(&a[..40], &populate_ues(&fewer).unwrap()[..]);
    big.seed = 2;
    assert_ne!(a, populate_ues(&big).unwrap());
}

#[test]
fn zero_duration() {
    for s in Strategy::ALL {
        let (report, log) = run(&small(5, 0.0), s).unwrap();
        assert!(log.is_empty());
        assert_eq!(
            (report.samples, report.ho_count, report.signaling_messages),
            (0, 0, 0)
        );
        assert_eq!(report.atr_bps, 0.0);
    }
}

#[test]
fn invalid_scenarios_rejected() {
    let mut sc = small(5, 600.0);
    sc.time_step_s = 0.0;
    assert!(matches!(
        run(&sc, Strategy::Caas),
        Err(SimError::Scenario(_))
    ));
    let mut sc = small(5, 600.0);
    sc.shells.clear();
    assert!(run(&sc, Strategy::Standalone).is_err());
}

#[test]
fn runs_are_reproducible() {
    let sc = small(6, 240.0);
    let ctx = SimContext::new(&sc).unwrap();
    for s in Strategy::ALL {
        let (r1, l1) = run_with(&ctx, &sc, s).unwrap();
        let (r2, l2) = run(&sc, s).unwrap();
        assert_eq!(l1.to_jsonl().unwrap(), l2.to_jsonl().unwrap());
        assert_eq!(
            serde_json::to_string(&r1).unwrap(),
            serde_json::to_string(&r2).unwrap()
        );
        // metrics are a pure function of the log
        assert_eq!(compute_metrics(&l1, &sc).unwrap(), r1);
        l1.check_order().unwrap();
    }
}

#[test]
fn lonely_satellite_gives_no_choice() {
    let sc = lonely();
    let (c, cl) = run(&sc, Strategy::Caas).unwrap();
    let (s, _) = run(&sc, Strategy::Standalone).unwrap();
    assert!(c.atr_bps > 0.0, "the pass must be inside the horizon");
    assert_eq!((c.ho_count, s.ho_count), (0, 0));
    assert_eq!(c.signaling_messages, 0);
    assert!(
        (c.atr_bps - s.atr_bps).abs() <= 1e-9 * s.atr_bps,
        "{} vs {}",
        c.atr_bps,
        s.atr_bps
    );
    assert_eq!(c.outage_fraction, s.outage_fraction);
    assert!(cl.events.iter().any(|e| matches!(e, Event::Sc(_))));
}

#[test]
fn metrics_of_constant_rate() {
    let mut sc = small(2, 10.0);
    sc.time_step_s = 1.0;
    let mut log = EventLog::new();
    for k in 0..10 {
        log.events.push(rate(k as f64, 0, 5e7, true));
        log.events.push(rate(k as f64, 1, 5e7, true));
    }
    let m = compute_metrics(&log, &sc).unwrap();
    assert_eq!(m.samples, 10);
    assert!((m.atr_bps - 5e7).abs() < 1e-6);
    assert_eq!((m.ho_count, m.ho_per_ue, m.outage_fraction), (0, 0.0, 0.0));
    assert_eq!(compute_metrics(&log, &sc).unwrap(), m);
}

#[test]
fn metrics_of_half_coverage() {
    let sc = small(1, 10.0);
    let mut log = EventLog::new();
    for k in 0..10 {
        log.events
            .push(rate(k as f64, 0, if k < 5 { 8e7 } else { 0.0 }, k < 5));
    }
    let m = compute_metrics(&log, &sc).unwrap();
    assert!((m.atr_bps - 4e7).abs() < 1e-6);
    assert!((m.outage_fraction - 0.5).abs() < 1e-12);
}

#[test]
fn metrics_count_the_protocol() {
    let sc = small(1, 100.0);
    let mut log = EventLog::new();
    log.events.push(Event::Sequence(ho(0.0, 0, 0)));
    for (k, (t, a, b)) in [(10.0, 0, 1), (20.0, 1, 0), (70.0, 0, 2)]
        .into_iter()
        .enumerate()
    {
        let r = ho(t, a, b);
        log.events.push(Event::Prepare(HoRecord {
            t: t - 0.06,
            ..r.clone()
        }));
        log.events.push(Event::Ack(HoRecord {
            t: t - 0.05,
            ..r.clone()
        }));
        log.events.push(Event::Execute(r.clone()));
        log.events
            .push(Event::Complete(HoRecord { t: t + 0.1, ..r }));
        assert!(k < 3);
    }
    let m = compute_metrics(&log, &sc).unwrap();
    assert_eq!(
        (m.ho_count, m.signaling_messages, m.pingpong_count),
        (3, 13, 1)
    );
    assert_eq!(m.ho_per_ue, 3.0);
    assert_eq!(m.outage_fraction, 1.0);

    log.events.swap(1, 5);
    assert!(matches!(
        compute_metrics(&log, &sc),
        Err(SimError::Ordering { .. })
    ));
    log.events.swap(1, 5);
    log.events.push(rate(99.0, 3, 1.0, true));
    assert!(compute_metrics(&log, &sc).is_err());
}

#[test]
fn simulated_handovers_match_the_report() {
    let sc = small(8, 300.0);
    let ctx = SimContext::new(&sc).unwrap();
    for s in Strategy::ALL {
        let (r, log) = run_with(&ctx, &sc, s).unwrap();
        assert_eq!(log.executed_handovers().count(), r.ho_count);
        assert_eq!(
            log.events.iter().filter(|e| e.is_signaling()).count(),
            r.signaling_messages
        );
        assert_eq!(
            log.events
                .iter()
                .filter(|e| matches!(e, Event::Pingpong(_)))
                .count(),
            r.pingpong_count
        );
        assert_eq!(
            r.per_ue.iter().map(|u| u.ho_count).sum::<usize>(),
            r.ho_count
        );
        assert!(r
            .per_ue
            .iter()
            .all(|u| (0.0..=1.0).contains(&u.outage_fraction) && u.atr_bps >= 0.0));
        let rates = log
            .events
            .iter()
            .filter(|e| matches!(e, Event::Rate(_)))
            .count();
        assert!(rates <= r.samples * r.ue_count);
    }
}

#[test]
fn sweep_rows() {
    let sc = small(0, 120.0);
    let ctx = SimContext::new(&sc).unwrap();
    let rows = sweep_with(&ctx, &sc, &[3], &[1, 2]).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(
        rows.iter()
            .map(|r| (r.ue_count, r.strategy))
            .collect::<Vec<_>>(),
        vec![(3, Strategy::Caas), (3, Strategy::Standalone)]
    );
    assert!(rows
        .iter()
        .all(|r| r.atr_mean_bps > 0.0 && r.atr_std >= 0.0));
    assert!(sweep_with(&ctx, &sc, &[], &[1]).is_err());
}
