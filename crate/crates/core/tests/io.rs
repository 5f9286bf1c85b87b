mod common;

use common::*;
use orfh_core::io::{read_fcidump, tensors_from_json, tensors_to_json, write_fcidump};
use orfh_core::jordan_wigner;
use orfh_core::reference::exact_ground_state;

const E0_TWO_SITES: f64 = -4.531128874149274;

/// Two-site ring with t = 1 (hopping doubled by the ring), U = 1, μ = 0.5.
const TWO_SITE_RING: &str = "\
 &FCI NORB=2,NELEC=2,MS2=0,
  ORBSYM=1,1,
  ISYM=1,
 &END
  1.0000000000000000E+00    1    1    1    1
  1.0D+00    2    2    2    2
 -2.0000000000000000E+00    2    1    0    0
 -5.0000000000000000E-01    1    1    0    0
 -0.5    2    2    0    0
  0.0    0    0    0    0
";

#[test]
fn crafted_fcidump_reproduces_the_ring() {
    let dump = read_fcidump(TWO_SITE_RING).unwrap();
    assert_eq!((dump.n_orbitals, dump.n_electrons), (2, 2));
    let sum = jordan_wigner(&dump.tensors).unwrap();
    let e0 = exact_ground_state(&sum, 1).unwrap()[0].energy;
    assert!((e0 - E0_TWO_SITES).abs() < 1e-10);
    assert!(max_abs(&(fock_matrix(&dump.tensors) - fock_matrix(&fh(2)))) < 1e-12);
}

#[test]
fn fcidump_round_trip() {
    let written = write_fcidump(&fh(3), 3).unwrap();
    let back = read_fcidump(&written).unwrap();
    assert!(max_abs(&(fock_matrix(&back.tensors) - fock_matrix(&fh(3)))) < 1e-12);
    assert_eq!(write_fcidump(&back.tensors, 3).unwrap(), written);
}

#[test]
fn rotated_instances_cannot_be_written_as_fcidump() {
    assert!(write_fcidump(&orfh(2, 0), 2).is_err());
}

#[test]
fn json_round_trip_is_exact() {
    let t = orfh(3, 8);
    let text = tensors_to_json(&t).unwrap();
    let back = tensors_from_json(&text).unwrap();
    assert_eq!(tensors_to_json(&back).unwrap(), text);
    assert_eq!(fock_matrix(&back), fock_matrix(&t));
}

#[test]
fn parse_errors_carry_line_numbers() {
    let bad = TWO_SITE_RING.replace("-0.5    2    2    0    0", "-0.5    2    x    0    0");
    let err = read_fcidump(&bad).unwrap_err().to_string();
    assert!(err.contains("line 9"), "{err}");
    let out_of_range = TWO_SITE_RING.replace("-0.5    2    2    0    0", "-0.5    3    2    0    0");
    assert!(read_fcidump(&out_of_range).is_err());
}
