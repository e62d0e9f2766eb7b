use fhtlr::env::{GridWorld, GridWorldConfig, Wireless, WirelessConfig, WirelessState};
use fhtlr::rng;
use fhtlr::{Environment, MultiIndex};
use rand::Rng as _;

#[test]
fn grid_dynamics_agree_with_simulator() {
    let mut env = GridWorld::new(GridWorldConfig::default()).unwrap();
    let d = env.dynamics();
    let space = env.space().clone();
    let mut r = rng::stream(11, 0);
    let mut steps = 0;
    while steps < 100_000 {
        let mut s = env.reset(&mut r);
        for t in 1..=space.horizon() {
            let a = r.random_range(0..4);
            let step = env.step(t, &MultiIndex(vec![a]), &mut r).unwrap();
            let (fs, fn_) = (
                space.flat_state(&s).unwrap(),
                space.flat_state(&step.next_state).unwrap(),
            );
            assert_eq!(d.prob(fs, a, fn_), 1.0);
            assert_eq!(d.reward(fs, a), step.reward);
            s = step.next_state;
            steps += 1;
        }
    }
}

#[test]
fn wireless_stays_in_range() {
    let mut env = Wireless::new(WirelessConfig::default()).unwrap();
    let space = env.space().clone();
    let cfg = env.config().clone();
    let mut r = rng::stream(5, 0);
    let mut steps = 0;
    while steps < 100_000 {
        env.reset(&mut r);
        for t in 1..=space.horizon() {
            let a = space
                .action_index(r.random_range(0..space.n_actions()))
                .unwrap();
            let step = env.step(t, &a, &mut r).unwrap();
            let st = WirelessState::from_index(cfg.channels, &step.next_state);
            assert!(st.battery < cfg.battery_levels);
            assert!(st.queue <= cfg.queue_capacity);
            space.flat_state(&step.next_state).unwrap();
            if t < space.horizon() {
                assert_eq!(step.reward, 0.0);
            } else {
                assert_eq!(step.reward, env.terminal_reward(st.battery, st.queue));
            }
            steps += 1;
        }
    }
}

#[test]
fn wireless_chains_reach_their_stationary_laws() {
    let env = Wireless::new(WirelessConfig::default()).unwrap();
    let cfg = env.config().clone();
    let levels = cfg.fading_gains.len();
    let mut r = rng::stream(8, 0);
    let mut state = WirelessState {
        fading: vec![0; cfg.channels],
        busy: vec![true; cfg.channels],
        battery: 0,
        queue: 0,
    };
    let samples = 100_000;
    let thin = 10;
    let mut free = 0u64;
    let mut level0 = 0u64;
    for i in 0..(samples + 10) * thin {
        state = env.advance(&state, &[0, 0], 1, &mut r).unwrap().0;
        if i >= 10 * thin && i % thin == 0 {
            free += (!state.busy[0]) as u64;
            level0 += (state.fading[1] == 0) as u64;
        }
    }
    let n = samples as f64;
    let check = |count: u64, p: f64| {
        let sigma = (n * p * (1.0 - p)).sqrt();
        assert!(
            (count as f64 - n * p).abs() <= 3.0 * sigma,
            "{count} vs {}",
            n * p
        );
    };
    check(free, cfg.stationary_free());
    check(level0, 1.0 / levels as f64);
}
