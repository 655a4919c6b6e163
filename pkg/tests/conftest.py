import pytest

from framesched.profiles import EnvProfile, FrameSource, ModelProfile, default_config_text, gen_frames, load_profiles
from framesched.sim import load_sim_config


@pytest.fixture(scope="session")
def default_profile():
    models, env, source = load_profiles(default_config_text())
    return models, env, source


@pytest.fixture(scope="session")
def models(default_profile):
    return default_profile[0]


@pytest.fixture(scope="session")
def env(default_profile):
    return default_profile[1]


@pytest.fixture(scope="session")
def base_config():
    return load_sim_config(default_config_text())


def make_env(bandwidth_mbps=2.0, rtt_ms=100.0, fps=30.0, deadline_ms=200.0):
    return EnvProfile(bandwidth_mbps * 1e6, rtt_ms, fps, deadline_ms)


def make_frames(env, n, bits_per_pixel=4.0, jitter=0.0, seed=0, ladder=(45, 90, 134, 179, 224)):
    return gen_frames(FrameSource("synthetic", bits_per_pixel, jitter, seed, ladder=ladder), env, n)


def local_model(model_id, npu_ms, acc, name=None):
    return ModelProfile(model_id, name or f"m{model_id}", npu_ms, None, {224: acc}, acc)


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, config):
    if config.acceptance_lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in config.acceptance_lines:
            terminalreporter.write_line(line)
