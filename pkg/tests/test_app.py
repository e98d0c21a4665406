from pathlib import Path

from streamlit.testing.v1 import AppTest

APP = str(Path(__file__).resolve().parent.parent / "app.py")


def test_dashboard_renders():
    at = AppTest.from_file(APP, default_timeout=120).run()
    assert not at.exception
    assert len(at.tabs) == 5
    assert [m.label for m in at.metric][:3] == ["Total MACs", "Weights", "Input features"]


def test_other_network_without_curves():
    at = AppTest.from_file(APP, default_timeout=120).run()
    at.sidebar.selectbox[0].set_value("VGG-16").run()
    assert not at.exception
    cut = next(m for m in at.metric if m.label == "Encoding")
    assert cut.value == "none"
