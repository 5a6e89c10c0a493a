use pyo3::prelude::*;
use qotp_lab_py::qotp_lab_py;

fn run(code: &std::ffi::CStr) {
    Python::attach(|py| {
        if let Err(e) = py.run(code, None, None) {
            e.print(py);
            panic!("python raised");
        }
    });
}

#[test]
fn module_works_from_embedded_interpreter() {
    pyo3::append_to_inittab!(qotp_lab_py);
    run(c"
import json
import qotp_lab_py as q
p = q.Pauli('+XZ')
assert repr(p) == \"Pauli('+XZ')\"
assert str(p.conjugated('H', [0])) == '+ZZ'
fam = q.TrapFamily('toy')
assert fam.block_len == 3 and fam.distance == 1
assert fam.sample(3).classify(q.Pauli('+III')) == 'trivial_accept'
assert q.forgery_odds(8, 1, 2) == (1 / 256, 1 / 256)
r = json.loads(q.run_experiment(json.dumps({'command': 'brotp-check', 'samples': {'programs': 1, 'mac_pairs': 0}})))
assert r['pass'], r['checks']
try:
    q.Pauli('+XQ')
    raise AssertionError('bad text accepted')
except ValueError:
    pass
");
}
