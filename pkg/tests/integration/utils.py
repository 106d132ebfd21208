import os

import simplejson as json


def get_resource_path(filename):
    return '{}/resources/{}'.format(os.path.dirname(__file__), filename)


def get_resource_text(filename):
    with open(get_resource_path(filename)) as resource:
        return resource.read()


def get_test_config():
    with open(get_resource_path('config.json')) as config_json:
        return json.load(config_json)
