use super::{LinearMdp, MarkovPolicy};

/// `V_h(x)` for `h = 0..=H` (the last row is identically zero).
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    values: Vec<Vec<f64>>,
}

impl ValueTable {
    pub fn get(&self, h: usize, x: usize) -> f64 {
        self.values[h][x]
    }

    pub fn step(&self, h: usize) -> &[f64] {
        &self.values[h]
    }

    pub fn start_value(&self, mdp: &LinearMdp) -> f64 {
        self.values[0][mdp.initial_state()]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }
}

/// Backward-induction evaluation of `policy`.
pub fn exact_value(mdp: &LinearMdp, policy: &MarkovPolicy) -> ValueTable {
    let (n_x, n_a, horizon) = (mdp.n_states(), mdp.n_actions(), mdp.horizon());
    let mut values = vec![vec![0.0; n_x]; horizon + 1];
    for h in (0..horizon).rev() {
        let (head, tail) = values.split_at_mut(h + 1);
        let next = &tail[0];
        for x in 0..n_x {
            let row = policy.row(h, x);
            let mut v = 0.0;
            for a in 0..n_a {
                if row[a] == 0.0 {
                    continue;
                }
                v += row[a] * (mdp.reward(h, x, a) + dot(mdp.transition(h, x, a), next));
            }
            head[h][x] = v;
        }
    }
    ValueTable { values }
}

/// `V^π_1(x_1)`.
pub fn policy_value(mdp: &LinearMdp, policy: &MarkovPolicy) -> f64 {
    exact_value(mdp, policy).start_value(mdp)
}

#[derive(Debug, Clone)]
pub struct OptimalPolicy {
    pub policy: MarkovPolicy,
    pub values: ValueTable,
    /// `V*(x_1)`.
    pub value: f64,
}

/// Optimal deterministic policy by backward induction, lowest action index on ties.
pub fn optimal_policy(mdp: &LinearMdp) -> OptimalPolicy {
    let (n_x, n_a, horizon) = (mdp.n_states(), mdp.n_actions(), mdp.horizon());
    let mut values = vec![vec![0.0; n_x]; horizon + 1];
    let mut actions = vec![vec![0usize; n_x]; horizon];
    for h in (0..horizon).rev() {
        for x in 0..n_x {
            let mut best = f64::NEG_INFINITY;
            for a in 0..n_a {
                let q = mdp.reward(h, x, a) + dot(mdp.transition(h, x, a), &values[h + 1]);
                if q > best {
                    best = q;
                    actions[h][x] = a;
                }
            }
            values[h][x] = best;
        }
    }
    let policy = MarkovPolicy::deterministic(n_a, &actions).expect("argmax table is well formed");
    let value = values[0][mdp.initial_state()];
    OptimalPolicy { policy, values: ValueTable { values }, value }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
