from .agents import ALGOS, DDPG, SAC, TD3, ActorPolicy, AgentConfig, load_agent, make_agent
from .buffer import Batch, ReplayBuffer
from .train import TrainConfig, TrainingDiverged, batch_size, noise_scale, select_action, train

__all__ = ["ALGOS", "DDPG", "SAC", "TD3", "ActorPolicy", "AgentConfig", "Batch", "ReplayBuffer",
           "TrainConfig", "TrainingDiverged", "batch_size", "load_agent", "make_agent",
           "noise_scale", "select_action", "train"]
