use fklab::engines::exact::{PathTally, DEFAULT_LIMIT};
use fklab::fk::{critical_point, BcKind, BoundaryPartition};
use fklab::geometry::build_dobrushin_box;
use fklab::parafermion::{max_local_residual, spin, ObservableField};

#[test]
fn local_relation_holds_at_criticality_only() {
    let d = build_dobrushin_box(3, 3).unwrap();
    let bc = BoundaryPartition::for_domain(&d, BcKind::Dobrushin).unwrap();
    let t = PathTally::new(&d, &bc, DEFAULT_LIMIT).unwrap();
    for q in [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5] {
        let sigma = spin(q).unwrap().sigma;
        let f = ObservableField::exact(t.observable_f(critical_point(q).unwrap(), q, sigma));
        let r = max_local_residual(&d, &f);
        println!("q={q} residual={r:e}");
        assert!(r < 1e-12, "q={q} residual {r}");
    }
    let f = ObservableField::exact(t.observable_f(0.45, 2.0, 0.5));
    assert!(max_local_residual(&d, &f) > 1e-6);
}

#[test]
fn free_boundary_values_are_determined_by_connectivity() {
    use fklab::parafermion::boundary_law_deviation;
    let d = build_dobrushin_box(3, 3).unwrap();
    let bc = BoundaryPartition::for_domain(&d, BcKind::Dobrushin).unwrap();
    let t = PathTally::new(&d, &bc, DEFAULT_LIMIT).unwrap();
    for (p, q) in [(0.3, 1.0), (0.5, 2.0), (0.7, 3.0)] {
        let sigma = spin(q).unwrap().sigma;
        let f = ObservableField::exact(t.observable_f(p, q, sigma));
        let dev = boundary_law_deviation(&d, &f, sigma, &t.connectivity(p, q));
        println!("p={p} q={q} dev={dev:e}");
        assert!(dev < 1e-12);
    }
}
