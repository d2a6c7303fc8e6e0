"""Cognitive-reward driving RL testbed.

Subpackages:

- ``nn``      -- minimal dense-tensor layers, losses, Adam, gradient checking,
  and a small binary weight format.  Everything is float64 numpy with
  hand-written backward passes.
- ``sim``     -- deterministic 2-D driving scenarios (emergency braking,
  unprotected left turn) plus a top-down semantic renderer.
- ``eeg``     -- synthetic EEG session generator, offline preprocessing,
  epoching, ERP amplitude labeling and permutation statistics.
- ``reward``  -- CNN classifier mapping rendered states to the probability of
  a high-amplitude ERP response, with cross-validation and a throughput
  benchmark.
- ``agent``   -- TD3 actor/critic with a self-attention policy, replay buffer,
  composed reward, scripted expert, behavior cloning and a Bradley-Terry
  preference baseline.
- ``harness`` -- route metrics, experiment orchestration, figures and the
  command line interface.
"""

__version__ = "0.1.0"
