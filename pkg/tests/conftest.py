from hypothesis import settings

# Property tests run on a fixed example stream so results are reproducible.
settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")
