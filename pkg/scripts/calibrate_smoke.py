"""Calibration for the training smoke check: how many PPO steps does the
opposite-goal text reward need on lane-3-density-1 before the success rate
clears the random-policy baseline by a wide margin?"""

import time

import numpy as np

from oppodrive.evaluation import (DEFAULT_EVAL_SEEDS, evaluate, run_episode,
                                  random_policy, setting_config, summarize)
from oppodrive.ppo import PpoConfig, checkpoint_load, train
from oppodrive.rewards import RewardSpec

SETTING = "lane-3-density-1"


def random_sr():
    config = setting_config(SETTING)
    logs = [run_episode(config, seed, random_policy(np.random.default_rng(seed)))
            for seed in DEFAULT_EVAL_SEEDS]
    return summarize(SETTING, logs, DEFAULT_EVAL_SEEDS).success_rate


def main():
    t0 = time.time()
    baseline = random_sr()
    print(f"random-policy SR: {baseline:.2f}  ({time.time() - t0:.1f}s)", flush=True)

    env = setting_config(SETTING)
    spec = RewardSpec(kind="opposite_goal", modality="text")
    for total in (8192, 16384, 32768):
        ppo = PpoConfig(rollout_length=2048, total_env_steps=total,
                        hidden_sizes=(128, 128), seed=7)
        run_dir = f"/tmp/smoke_{total}"
        t1 = time.time()
        final = train(env, spec, ppo, run_dir)
        train_s = time.time() - t1
        net = checkpoint_load(final)
        report, _ = evaluate(net, SETTING)
        print(f"steps={total:6d}  SR={report.success_rate:6.2f}  "
              f"delta={report.success_rate - baseline:6.2f}pp  "
              f"train={train_s:.1f}s", flush=True)


if __name__ == "__main__":
    main()
