use fhtlr::env::{GridWorld, GridWorldConfig, TwoState, TwoStateConfig};
use fhtlr::{
    run_episode, train_episode, Environment, Error, FhqAgent, StateActionSpace, StepSizeSchedule,
};

fn grid() -> GridWorld {
    GridWorld::new(GridWorldConfig::default()).unwrap()
}

fn fhq(space: &StateActionSpace) -> FhqAgent {
    FhqAgent::new(space.clone(), StepSizeSchedule::constant(0.5)).unwrap()
}

#[test]
fn uniform_exploration_frequencies() {
    let mut env = grid();
    let agent = fhq(env.space());
    let mut counts = [0u64; 4];
    let mut n = 0u64;
    for seed in 0..20_000 {
        for tr in run_episode(&mut env, &agent, 1.0, seed)
            .unwrap()
            .transitions
        {
            counts[tr.action[0]] += 1;
            n += 1;
        }
    }
    assert_eq!(n, 100_000);
    let p = 0.25;
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    for c in counts {
        assert!((c as f64 - n as f64 * p).abs() <= 3.0 * sigma, "{counts:?}");
    }
}

#[test]
fn episodes_are_deterministic_and_full_length() {
    let mut env = grid();
    let agent = fhq(env.space());
    for seed in 0..50 {
        let a = run_episode(&mut env, &agent, 0.3, seed).unwrap();
        let b = run_episode(&mut env, &agent, 0.3, seed).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.transitions.len(), 5);
        for (i, tr) in a.transitions.iter().enumerate() {
            assert_eq!(tr.t, i + 1);
            assert_eq!(tr.terminal, i == 4);
        }
        let sum: f64 = a.transitions.iter().map(|t| t.reward).sum();
        assert_eq!(sum, a.ret);
    }
}

#[test]
fn training_episodes_replay_identically() {
    let mut env = grid();
    let mut a = fhq(env.space());
    let mut b = fhq(env.space());
    for seed in 0..200 {
        let x = train_episode(&mut env, &mut a, 0.5, seed).unwrap();
        let y = train_episode(&mut env, &mut b, 0.5, seed).unwrap();
        assert_eq!(x, y);
    }
    assert_eq!(a.table().values(), b.table().values());
}

#[test]
fn mismatched_agent_is_a_contract_error() {
    let mut env = TwoState::new(TwoStateConfig::default()).unwrap();
    let other = StateActionSpace::new(vec![3], vec![2], 2).unwrap();
    let agent = fhq(&other);
    assert!(matches!(
        run_episode(&mut env, &agent, 0.0, 1),
        Err(Error::Contract(_))
    ));
}
