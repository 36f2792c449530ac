use super::exec::GradientTape;
use crate::netgraph::NetworkGraph;
use std::collections::HashMap;

/// Adam with the default moments (0.9, 0.999) and eps 1e-8. Fixed
/// parameters and buffers are never updated; moment state lives in `f64`.
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
    m: HashMap<(String, String), Vec<f64>>,
    v: HashMap<(String, String), Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f32) -> Self {
        Adam {
            lr: lr as f64,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: HashMap::new(),
            v: HashMap::new(),
        }
    }

    pub fn step(&mut self, net: &mut NetworkGraph, tape: &GradientTape) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for p in net.params.iter_mut() {
            if p.fixed || p.buffer {
                continue;
            }
            let key = (p.owner.clone(), p.name.clone());
            let Some(grad) = tape.grads.get(&key) else {
                continue;
            };
            let m = self
                .m
                .entry(key.clone())
                .or_insert_with(|| vec![0.0; p.tensor.numel()]);
            let v = self
                .v
                .entry(key)
                .or_insert_with(|| vec![0.0; p.tensor.numel()]);
            for ((pv, &g), (mi, vi)) in p
                .tensor
                .data_mut()
                .iter_mut()
                .zip(grad.data())
                .zip(m.iter_mut().zip(v.iter_mut()))
            {
                let g = g as f64;
                *mi = self.beta1 * *mi + (1.0 - self.beta1) * g;
                *vi = self.beta2 * *vi + (1.0 - self.beta2) * g * g;
                let mhat = *mi / bc1;
                let vhat = *vi / bc2;
                *pv = (*pv as f64 - self.lr * mhat / (vhat.sqrt() + self.eps)) as f32;
            }
        }
    }
}
