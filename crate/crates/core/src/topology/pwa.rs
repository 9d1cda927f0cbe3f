use nalgebra::DVector;

use super::{compose_links, TopologyLayers};
use crate::error::{invalid, Error, Result};
use crate::model::NetworkModel;

/// Open-loop trajectory of a layered network.
#[derive(Clone, Debug, PartialEq)]
pub struct PwaTrajectory {
    /// `states[k][i]`, for `k = 0..=steps`.
    pub states: Vec<Vec<DVector<f64>>>,
    /// `links[k][c]`: whether coupling `c` was active at step `k`.
    pub links: Vec<Vec<bool>>,
    /// `modes[k][i]`: active mode of subsystem `i` at step `k`.
    pub modes: Vec<Vec<usize>>,
    /// Steps whose resulting state left the state box.
    pub out_of_box: Vec<usize>,
}

pub(crate) fn check_inputs(net: &NetworkModel, x0: &[DVector<f64>], inputs: &[Vec<DVector<f64>>], steps: usize) -> Result<()> {
    if x0.len() != net.len() || x0.iter().enumerate().any(|(i, x)| x.len() != net.subsystem(i).n_x()) {
        return Err(Error::Dimension("initial state does not match the network".into()));
    }
    if inputs.len() < steps {
        return Err(invalid(format!("{} input vectors given for {steps} steps", inputs.len())));
    }
    for u in &inputs[..steps] {
        if u.len() != net.len() || u.iter().enumerate().any(|(i, v)| v.len() != net.subsystem(i).n_u()) {
            return Err(Error::Dimension("input sequence does not match the network".into()));
        }
    }
    if !net.in_state_box(x0) {
        return Err(invalid("initial state lies outside the state box"));
    }
    Ok(())
}

/// Simulates the network with guards evaluated and layers composed at every
/// step. Leaving the state box is recorded, not treated as an error.
pub fn simulate_pwa(
    net: &NetworkModel,
    layers: &TopologyLayers,
    x0: &[DVector<f64>],
    inputs: &[Vec<DVector<f64>>],
    steps: usize,
) -> Result<PwaTrajectory> {
    check_inputs(net, x0, inputs, steps)?;
    layers.validate(net, Some(steps))?;
    let mut traj = PwaTrajectory { states: vec![x0.to_vec()], links: Vec::new(), modes: Vec::new(), out_of_box: Vec::new() };
    for (k, u) in inputs.iter().enumerate().take(steps) {
        let x = traj.states.last().expect("starts with x0");
        let modes: Vec<usize> = net.subsystems().iter().zip(x).map(|(s, xi)| s.active_mode(xi.as_slice())).collect();
        let mut next: Vec<DVector<f64>> = net
            .subsystems()
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let (a, b) = s.mode_matrices(modes[i]);
                a * &x[i] + b * &u[i]
            })
            .collect();
        let mut active = Vec::with_capacity(net.couplings().len());
        for c in net.couplings() {
            let on = match layers.for_edge(c.from, c.to) {
                Some(el) => {
                    let vals: Vec<Option<bool>> = el.layers.iter().map(|l| l.value(k, &x[c.from], &u[c.from])).collect();
                    compose_links(&vals)?
                }
                None => true,
            };
            if on {
                next[c.to] += &c.gain * &x[c.from];
            }
            active.push(on);
        }
        if !net.in_state_box(&next) {
            traj.out_of_box.push(k);
        }
        traj.states.push(next);
        traj.links.push(active);
        traj.modes.push(modes);
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Coupling, Interval, SubsystemModel};
    use crate::topology::{EdgeLayers, Layer, Schedule};

    fn scalar(v: f64) -> DVector<f64> {
        DVector::from_element(1, v)
    }

    #[test]
    fn hybrid_agent_first_step() {
        let net = NetworkModel::uniform_scalar(1, SubsystemModel::scalar_hybrid(0.5, 1.0, -0.5, 1.0), vec![], Interval::symmetric(0.9), Interval::symmetric(0.5)).unwrap();
        let u = vec![vec![scalar(0.0)]];
        let t = simulate_pwa(&net, &TopologyLayers::default(), &[scalar(0.4)], &u, 1).unwrap();
        assert!((t.states[1][0][0] - 0.2).abs() < 1e-15);
        let t = simulate_pwa(&net, &TopologyLayers::default(), &[scalar(-0.4)], &u, 1).unwrap();
        assert!((t.states[1][0][0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn all_layers_on_equals_static_coupling() {
        let net = NetworkModel::uniform_scalar(2, SubsystemModel::scalar_linear(0.5, 1.0), vec![Coupling::scalar(0, 1, 0.3)], Interval::symmetric(1.0), Interval::symmetric(1.0)).unwrap();
        let layers = TopologyLayers::new(vec![EdgeLayers {
            from: 0,
            to: 1,
            layers: vec![Layer::Decision(Schedule::Constant(true)), Layer::Signal(Schedule::Constant(true))],
        }]);
        let x0 = [scalar(0.5), scalar(-0.2)];
        let u: Vec<_> = (0..5).map(|k| vec![scalar(0.1 * k as f64), scalar(-0.05)]).collect();
        let a = simulate_pwa(&net, &layers, &x0, &u, 5).unwrap();
        let b = simulate_pwa(&net, &TopologyLayers::default(), &x0, &u, 5).unwrap();
        assert_eq!(a.states, b.states);
        let mut x = x0.to_vec();
        for uk in &u {
            x = net.step(&x, uk);
        }
        assert_eq!(&a.states[5], &x);
    }

    #[test]
    fn leaving_the_box_is_flagged() {
        let net = NetworkModel::uniform_scalar(1, SubsystemModel::scalar_linear(1.0, 1.0), vec![], Interval::symmetric(1.0), Interval::symmetric(1.0)).unwrap();
        let u = vec![vec![scalar(0.8)]; 3];
        let t = simulate_pwa(&net, &TopologyLayers::default(), &[scalar(0.5)], &u, 3).unwrap();
        assert_eq!(t.out_of_box, vec![0, 1, 2]);
        assert_eq!(t.states.len(), 4);
    }
}
