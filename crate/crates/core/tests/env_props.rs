use proptest::prelude::*;
use uavlc::channel::VlcParams;
use uavlc::env::{
    replay_pheromone, shaped_reward, validate_episode, ActionCmd, Environment, EpisodeLog, RewardParams,
    Shaping, WorldInstance,
};

#[derive(Debug, Clone)]
struct Case {
    world: WorldInstance,
    reward: RewardParams,
    actions: Vec<[f64; 2]>,
}

fn case() -> impl Strategy<Value = Case> {
    (
        20.0f64..150.0,
        1usize..12,
        any::<u64>(),
        1usize..4,
        10.0f64..20.0,
        any::<bool>(),
        any::<bool>(),
        prop::collection::vec([-1.2f64..1.2, -1.2f64..1.2], 0..120),
    )
        .prop_map(|(side, count, seed, k_up, h, literal, sparse, actions)| {
            let mut world = WorldInstance::new(side, WorldInstance::uniform_gus(side, count, seed), h);
            world.k_up = k_up;
            world.step_cap = 600;
            let reward = RewardParams {
                literal_sign: literal,
                shaping: if sparse { Shaping::Sparse } else { Shaping::Pheromone },
                ..Default::default()
            };
            Case { world, reward, actions }
        })
}

fn vlc() -> VlcParams {
    VlcParams {
        capacity_threshold: 6.19,
        ..VlcParams::reference()
    }
}

/// Scripted actions first (possibly out of range), then straight to the nearest unserved GU.
fn rollout(env: &Environment, actions: &[[f64; 2]]) -> EpisodeLog {
    let v_max = env.world().v_max();
    let mut k = 0;
    env.run_episode(|s, _| {
        k += 1;
        if let Some(a) = actions.get(k - 1) {
            let mut cmd = ActionCmd::from_normalized(*a, v_max);
            cmd.speed = a[1] * v_max * 1.5;
            return cmd;
        }
        let target = (0..s.served.len())
            .filter(|&i| !s.served[i])
            .min_by(|&a, &b| s.distances[a].total_cmp(&s.distances[b]))
            .map(|i| env.world().gu_positions[i])
            .unwrap_or(s.uav_xy);
        let cmd = ActionCmd::toward(s.uav_xy, target, env.world().slot_duration);
        ActionCmd {
            speed: cmd.speed.min(v_max),
            ..cmd
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn logs_satisfy_constraints_and_replay(c in case()) {
        let env = Environment::new(c.world.clone(), vlc(), c.reward.clone()).unwrap();
        let log = rollout(&env, &c.actions);
        prop_assert!(validate_episode(&env, &log).is_ok());

        let last = log.steps.last().unwrap();
        prop_assert!(last.done);
        if !last.truncated {
            prop_assert_eq!(log.served_total(), c.world.gu_count());
        }
        let k_up = c.world.k_up;
        prop_assert!(log.steps.iter().all(|s| s.served_ids.len() <= k_up));
        prop_assert!(log.steps.iter().all(|s| s.distance <= c.world.d_max + 1e-9));

        let logged: Vec<f64> = log.steps.iter().map(|s| s.zeta).collect();
        let replayed = replay_pheromone(&env, &log);
        prop_assert_eq!(logged.iter().map(|z| z.to_bits()).collect::<Vec<_>>(),
                        replayed.iter().map(|z| z.to_bits()).collect::<Vec<_>>());

        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let back = EpisodeLog::read_csv(buf.as_slice(), c.world.start, c.world.gu_count()).unwrap();
        let from_csv = replay_pheromone(&env, &back);
        prop_assert_eq!(replayed, from_csv);

        prop_assert_eq!(rollout(&env, &c.actions), log);
    }

    #[test]
    fn pheromone_increments_decompose(c in case()) {
        let env = Environment::new(c.world.clone(), vlc(), c.reward.clone()).unwrap();
        let log = rollout(&env, &c.actions);
        let p = env.reward_params();
        let (comm, recep) = (env.comm_radius(), env.reception_radius());
        let mut served = vec![false; c.world.gu_count()];
        let mut prev_d = env.horizontal_distances(c.world.start);
        let mut zeta = 0.0;
        for s in &log.steps {
            for &g in &s.served_ids {
                prop_assert!(!served[g]);
                served[g] = true;
            }
            let d = env.horizontal_distances([s.x, s.y]);
            let mut bonus = 0.0;
            for i in 0..d.len() {
                let ring = !served[i] && d[i] > comm && d[i] <= recep;
                if ring && p.shaping == Shaping::Pheromone {
                    let sign = if p.literal_sign { -1.0 } else { 1.0 };
                    bonus += sign * p.rho * (prev_d[i] - d[i]);
                }
            }
            let expected = zeta + s.served_ids.len() as f64 * p.kappa_cov + bonus - p.kappa_dis
                - if s.boundary_hit { p.p_ob } else { 0.0 };
            prop_assert!((s.zeta - expected).abs() <= 1e-9 * (1.0 + expected.abs()));
            zeta = s.zeta;
            prev_d = d;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn squashed_reward_is_bounded_odd_and_monotone(
        i in 1usize..40,
        kappa in 0.1f64..5.0,
        a in -1.0f64..1.0,
        b in -1.0f64..1.0,
    ) {
        // |ζ| up to 30 I κ keeps tanh away from its rounding to ±1.
        let scale = 30.0 * i as f64 * kappa;
        let (z1, z2) = (a * scale, b * scale);
        let r1 = shaped_reward(z1, i, kappa);
        let r2 = shaped_reward(z2, i, kappa);
        prop_assert!(r1 > -1.0 && r1 < 1.0);
        prop_assert_eq!(shaped_reward(-z1, i, kappa), -r1);
        prop_assert_eq!(r1 > 0.0, z1 > 0.0);
        if z1 < z2 {
            prop_assert!(r1 <= r2);
        }
    }
}

#[test]
fn squashed_reward_at_zero() {
    for i in 1..30 {
        assert_eq!(shaped_reward(0.0, i, 1.0), 0.0);
    }
}
