import hypothesis


hypothesis.settings.register_profile('fast', max_examples=5, deadline=None)


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: acceptance campaigns at reduced replication counts')
