import hypothesis
import pytest

from fairgate.lexicon import DEFAULT_PRONOUNS, default_lexicon

hypothesis.settings.register_profile("fast", max_examples=20)
hypothesis.settings.register_profile("ci", max_examples=200, deadline=None)
hypothesis.settings.load_profile("ci")

GOLDEN_TEXT = (
    "'Never Been Kissed' is a real feel good film. Drew Barrymore is excellent again, "
    "she plays her part well. I felt I could relate to this film because of the school "
    "days I had were just as bad."
)
GOLDEN_MALE = GOLDEN_TEXT.replace("Drew Barrymore", "James").replace("she plays her", "he plays his")
GOLDEN_FEMALE = GOLDEN_TEXT.replace("Drew Barrymore", "Anne")
# global seed under which the first drawn names for GOLDEN_TEXT are James and Anne
GOLDEN_SEED = 3849

DEE_SNIDER_TEXT = (
    "Dee Snider was inspired to do a two part song by a horror movie. This movie he "
    "wrote/directed/produced and starred in details the subjects from those songs "
    "(Horror-terria,from TwistedSister/ Stay Hungry). ...  This movie is perfect if you "
    "want something to give you nightmares and make you cringe about the possible and "
    "probable. IT COULD HAPPEN!!"
)


@pytest.fixture(scope="session")
def lexicon():
    return default_lexicon()


@pytest.fixture(scope="session")
def table():
    return DEFAULT_PRONOUNS
