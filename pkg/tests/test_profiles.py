import pytest

from framesched.profiles import (
    EnvProfile,
    FrameSource,
    ModelProfile,
    ProfileError,
    default_config_text,
    gen_frames,
    load_profiles,
    ms_to_us,
    parse_document,
    read_frame_trace,
    serialize_profiles,
    tx_time_us,
    write_frame_trace,
)

from conftest import make_env, make_frames


def test_default_profile_durations(default_profile):
    models, env, source = default_profile
    by_name = {m.name: m for m in models}
    assert by_name["ResNet-50"].npu_us == 52_000
    assert by_name["ResNet-50"].server_us == 69_000
    assert by_name["SqueezeNet"].npu_us == 17_000
    assert by_name["SqueezeNet"].server_us == 9_000
    assert by_name["ResNet-50"].local_accuracy() == 0.52
    assert by_name["SqueezeNet"].local_accuracy() == 0.41
    assert env.deadline_us == 200_000 and env.rtt_us == 100_000
    assert source.ladder == (45, 90, 134, 179, 224)


def test_non_monotone_accuracy_rejected():
    text = default_config_text().replace("45 = 0.25", "45 = 0.7")
    with pytest.raises(ProfileError, match="accuracy not monotone"):
        load_profiles(text)


def test_empty_model_list_rejected():
    doc = parse_document(default_config_text())
    doc["models"] = []
    with pytest.raises(ProfileError, match="empty model list"):
        load_profiles(doc)


def test_duplicate_ids_rejected():
    doc = parse_document(default_config_text())
    doc["models"][1]["id"] = 0
    with pytest.raises(ProfileError, match="duplicate model id"):
        load_profiles(doc)


def test_resolution_outside_ladder_rejected():
    doc = parse_document(default_config_text())
    doc["models"][0]["accuracy"]["300"] = 0.9
    with pytest.raises(ProfileError, match="not in ladder"):
        load_profiles(doc)


def test_missing_env_field_names_it():
    doc = parse_document(default_config_text())
    del doc["env"]["deadline_ms"]
    with pytest.raises(ProfileError, match="deadline_ms"):
        load_profiles(doc)


def test_parse_error():
    with pytest.raises(ProfileError, match="parse error"):
        load_profiles("ladder = [")


def test_model_needs_a_deployment():
    with pytest.raises(ProfileError):
        ModelProfile(0, "x", None, None, {224: 0.5})


def test_one_sided_models():
    m = ModelProfile(0, "npu-only", 10.0, None, {224: 0.5})
    assert m.local and not m.remote
    assert m.local_accuracy() == 0.5


def test_sub_microsecond_duration_rejected():
    with pytest.raises(ProfileError, match="microseconds"):
        ModelProfile(0, "x", 1.0004, None, {224: 0.5})


def test_roundtrip_identity(default_profile):
    models, env, source = default_profile
    text = serialize_profiles(models, env, source)
    assert load_profiles(text) == (models, env, source)


def test_zero_jitter_sizes(env):
    frames = make_frames(env, 5)
    for f in frames:
        assert f.size(224) == 200_704
        assert f.size(45) == 8_100
        assert f.size(45) < f.size(224)


def test_arrivals(env):
    frames = make_frames(env, 4)
    assert [f.arrival_us for f in frames] == [0, 33_333, 66_666, 99_999]
    assert env.gamma_us == 33_333


def test_jitter_deterministic_and_shared_across_resolutions(env):
    a = make_frames(env, 50, jitter=0.2, seed=7)
    b = make_frames(env, 50, jitter=0.2, seed=7)
    assert a == b
    assert a != make_frames(env, 50, jitter=0.2, seed=8)
    for f in a:
        ratio = f.size(224) / (4 * 224 * 224)
        assert 0.8 <= ratio <= 1.2
        assert abs(f.size(45) / (4 * 45 * 45) - ratio) < 1e-3


def test_gen_frames_rejects_zero(env):
    with pytest.raises(ValueError):
        gen_frames(FrameSource(), env, 0)


def test_frame_interval_consistent():
    for fps in (10, 24, 29.97, 30, 50, 60):
        e = make_env(fps=fps)
        assert abs(e.frame_interval_ms * e.frame_rate_fps - 1000.0) <= 1e-9 * 1000


def test_env_validation():
    with pytest.raises(ProfileError):
        EnvProfile(0.0, 100, 30, 200)
    with pytest.raises(ProfileError):
        EnvProfile(1e6, -1, 30, 200)
    with pytest.raises(ProfileError):
        EnvProfile(1e6, 100, 30, 0)


def test_source_validation():
    with pytest.raises(ProfileError):
        FrameSource(jitter_fraction=1.0)
    with pytest.raises(ProfileError):
        FrameSource(mode="trace")
    with pytest.raises(ProfileError):
        FrameSource(ladder=(90, 45))


def test_trace_roundtrip(tmp_path, env):
    frames = make_frames(env, 6, jitter=0.3, seed=3)
    path = tmp_path / "t.csv"
    write_frame_trace(frames, path)
    assert path.read_text().splitlines()[0] == "index,s45,s90,s134,s179,s224"
    src = FrameSource("trace", trace_path=str(path))
    assert gen_frames(src, env, 6) == frames
    with pytest.raises(ProfileError, match="7 requested"):
        gen_frames(src, env, 7)


def test_trace_rejects_bad_header(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("index,s45\n0,10\n")
    with pytest.raises(ProfileError, match="header"):
        read_frame_trace(path)


def test_trace_sizes_must_increase(tmp_path, env):
    path = tmp_path / "t.csv"
    path.write_text("index,s45,s90,s134,s179,s224\n0,5,4,6,7,8\n")
    with pytest.raises(ProfileError, match="strictly increasing"):
        gen_frames(FrameSource("trace", trace_path=str(path)), env, 1)


def test_unit_helpers():
    assert ms_to_us(33.5) == 33_500
    assert tx_time_us(66_667, 2_000_000) == 33_334
    assert tx_time_us(66_666, 2_000_000) == 33_333
