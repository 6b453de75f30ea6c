use std::time::Instant;
use quasilin::canonical::{canonical_for_translation_scaling, Inverse, PointTransformation};
use quasilin::monge_ampere::{build_system, ma_fields, MADim, MASpec};
use quasilin::transform::{push_forward, systems_match};

fn main() {
    for dim in [MADim::OnePlusOne, MADim::TwoPlusOne, MADim::ThreePlusOne] {
        let spec = MASpec::generic(dim);
        let sys = build_system(&spec);
        let k = sys.n;
        let t = canonical_for_translation_scaling(&ma_fields(k as u32)).unwrap();
        let t0 = Instant::now();
        let fwd = push_forward(&sys, &t).unwrap();
        let fwd_t = t0.elapsed();
        let inv = t.inverse.clone().unwrap();
        let back = PointTransformation {
            n: t.n,
            m: t.m,
            z: inv.x_of.clone(),
            w: inv.u_of.clone(),
            inverse: Some(Inverse { x_of: t.z.clone(), u_of: t.w.clone() }),
        };
        let t1 = Instant::now();
        let rt = push_forward(&fwd.system, &back).unwrap();
        let back_t = t1.elapsed();
        let t2 = Instant::now();
        let ok = systems_match(&rt.system, &sys).unwrap();
        println!("{dim:?}: fwd {fwd_t:?} back {back_t:?} match({ok}) {:?}", t2.elapsed());
    }
}
